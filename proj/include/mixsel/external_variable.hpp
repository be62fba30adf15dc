#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mixsel {

// A categorical column not used for fitting. Levels are coded 0..U-1 in order
// of first appearance; U counts only observed levels.
class ExternalVariable {
public:
    static ExternalVariable from_strings(std::string name, const std::vector<std::string>& raw) {
        ExternalVariable out;
        out.name_ = std::move(name);
        std::unordered_map<std::string, int> index;
        out.values_.reserve(raw.size());
        for (const std::string& value : raw) {
            auto [it, inserted] = index.try_emplace(value, static_cast<int>(out.levels_.size()));
            if (inserted) out.levels_.push_back(value);
            out.values_.push_back(it->second);
        }
        return out;
    }

    // Arbitrary integer codes, recoded by first appearance.
    static ExternalVariable from_codes(std::string name, const std::vector<int>& codes) {
        std::vector<std::string> raw;
        raw.reserve(codes.size());
        for (int c : codes) raw.push_back(std::to_string(c));
        return from_strings(std::move(name), raw);
    }

    const std::string& name() const { return name_; }
    const std::vector<std::string>& levels() const { return levels_; }
    const std::vector<int>& values() const { return values_; }
    int level_count() const { return static_cast<int>(levels_.size()); }
    std::size_t size() const { return values_.size(); }

private:
    std::string name_;
    std::vector<std::string> levels_;
    std::vector<int> values_;
};

}  // namespace mixsel
