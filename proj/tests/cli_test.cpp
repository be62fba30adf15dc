#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "json.hpp"
#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               (std::string("mixsel_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    // Runs the CLI, returning its exit status; stdout and stderr go to files in dir_.
    int run(const std::string& args) {
        const std::string cmd = std::string("\"") + MIXSEL_CLI + "\" " + args + " > \"" + (dir_ / "stdout").string() +
                                "\" 2> \"" + (dir_ / "stderr").string() + "\"";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    std::string out(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

std::string iris_args() {
    return "fit --data \"" + mixsel::test::data_path("iris.csv") +
           "\" --features 1-4 --external Species --family full --k 1..8 --criteria bic,icl,sicl --seed 7 "
           "--restarts 20";
}

TEST_F(Cli, IrisSelections) {
    ASSERT_EQ(run(iris_args() + " --out \"" + out("a.json") + "\" --tsv \"" + out("a.tsv") + "\""), 0)
        << slurp(dir_ / "stderr");
    const auto j = nlohmann::json::parse(slurp(out("a.json")));
    EXPECT_EQ(j["selections"]["bic"]["K"], 2);
    EXPECT_EQ(j["selections"]["icl"]["K"], 2);
    EXPECT_EQ(j["selections"]["sicl"]["K"], 3);
    EXPECT_EQ(j["meta"]["n"], 150);

    // Same invocation twice gives byte-identical output.
    ASSERT_EQ(run(iris_args() + " --out \"" + out("b.json") + "\""), 0);
    EXPECT_EQ(slurp(out("a.json")), slurp(out("b.json")));

    // Re-rendering the written report reproduces the fit's TSV.
    ASSERT_EQ(run("report --input \"" + out("a.json") + "\" --tsv \"" + out("c.tsv") + "\" --svg \"" + out("c.svg") + "\""),
              0);
    EXPECT_EQ(slurp(out("a.tsv")), slurp(out("c.tsv")));
    const std::string svg = slurp(out("c.svg"));
    std::size_t lines = 0;
    for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++lines;
    EXPECT_EQ(lines, 3u);
}

TEST_F(Cli, MissingDataIsUsageError) {
    EXPECT_NE(run("fit --features 1-4"), 0);
    EXPECT_NE(run(""), 0);
}

TEST_F(Cli, SiclWithoutExternalIsUsageError) {
    const int code = run("fit --data \"" + mixsel::test::data_path("iris.csv") +
                         "\" --features 1-4 --criteria sicl --k 1..2 --out \"" + out("x.json") + "\"");
    EXPECT_EQ(code, 2);
    EXPECT_FALSE(fs::exists(out("x.json")));
}

TEST_F(Cli, BadInputsFail) {
    EXPECT_EQ(run("report --input \"" + out("absent.json") + "\""), 4);
    std::ofstream(out("bad.json")) << "not json";
    EXPECT_EQ(run("report --input \"" + out("bad.json") + "\""), 4);
    EXPECT_NE(run("fit --data \"" + out("absent.csv") + "\" --features a"), 0);
    EXPECT_EQ(run("fit --data \"" + mixsel::test::data_path("iris.csv") + "\" --features 1-4 --k 3..1"), 2);
    EXPECT_EQ(run("fit --data \"" + mixsel::test::data_path("iris.csv") + "\" --features 1-4 --family round"), 2);
}

TEST_F(Cli, SimulateDeterministicAndOneHot) {
    const std::string args = "simulate --design random-labels --reps 1 --restarts 2 --seed 3 --out ";
    ASSERT_EQ(run(args + "\"" + out("s1") + "\""), 0) << slurp(dir_ / "stderr");
    ASSERT_EQ(run(args + "\"" + out("s2") + "\""), 0);
    const std::string tsv = slurp(out("s1.tsv"));
    EXPECT_EQ(tsv, slurp(out("s2.tsv")));
    EXPECT_EQ(slurp(out("s1.json")), slurp(out("s2.json")));
    std::istringstream rows(tsv);
    std::string line;
    std::getline(rows, line);  // header
    int criteria = 0;
    while (std::getline(rows, line)) {
        std::istringstream cells(line);
        std::string name;
        cells >> name;
        std::vector<int> v;
        for (int x; cells >> x;) v.push_back(x);
        v.pop_back();  // failed column
        int sum = 0;
        for (int x : v) sum += x;
        EXPECT_EQ(sum, 1) << line;
        ++criteria;
    }
    EXPECT_EQ(criteria, 4);
}

TEST_F(Cli, SimulateConfigOverrides) {
    std::ofstream(out("cfg.txt")) << "n = 60\nk_max = 3\n";
    ASSERT_EQ(run("simulate --design cross --reps 2 --restarts 1 --config \"" + out("cfg.txt") + "\" --out \"" +
                  out("s") + "\""),
              0)
        << slurp(dir_ / "stderr");
    const auto j = nlohmann::json::parse(slurp(out("s.json")));
    EXPECT_EQ(j["design"]["n"], 60);
    EXPECT_EQ(j["k_max"], 3);
    std::ofstream(out("bad.txt")) << "nonsense = 1\n";
    EXPECT_EQ(run("simulate --design cross --reps 1 --config \"" + out("bad.txt") + "\""), 2);
}

}  // namespace
