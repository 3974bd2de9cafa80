#include <doctest.h>
#include <json.hpp>

#include <sstream>

#include "surgflow/cli.hpp"
#include "surgflow/csv_io.hpp"

using namespace surgflow;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "surgflow_cli" / name;
    fs::remove_all(dir);
    return dir;
}

std::vector<std::string> small_generate(const fs::path& out, const std::string& n = "4") {
    return {"generate", "--seed", "7", "--n", n, "--out", out.string(), "--task-min", "40", "--task-max", "80",
            "--kin-rate", "5"};
}

}  // namespace

TEST_CASE("generate writes procedure directories and a manifest") {
    const fs::path root = scratch("gen");
    const Run r = run(small_generate(root / "data", "20"));
    REQUIRE(r.code == 0);
    const auto dirs = procedure_dirs(root / "data");
    CHECK(dirs.size() == 20);
    for (const char* f : {"labels.csv", "annotation.csv", "kinematics.csv", "events.csv"}) {
        CHECK(fs::exists(dirs.front() / f));
    }
    const auto manifest = nlohmann::json::parse(read_text_file(root / "data" / "manifest.json"));
    CHECK(manifest["seed"] == 7);
    CHECK(manifest["procedures"].size() == 20);
    CHECK(manifest["config"]["kinematics_rate_hz"] == 5.0);
}

TEST_CASE("pipeline composes and zero noise gives the fixpoint") {
    const fs::path root = scratch("pipe");
    const std::string data = (root / "data").string();
    REQUIRE(run(small_generate(data)).code == 0);
    REQUIRE(run({"perturb", "--data", data, "--seed", "1"}).code == 0);
    CHECK(fs::exists(root / "data" / "p01" / "labels_pred.csv"));
    REQUIRE(run({"postprocess", "--in", data, "--window", "1", "--out", (root / "pred").string()}).code == 0);
    CHECK(fs::exists(root / "pred" / "p01" / "annotation.csv"));
    REQUIRE(run({"metrics", "--data", data, "--pred", (root / "pred").string(), "--out", (root / "m").string()}).code == 0);
    CHECK(fs::exists(root / "m" / "metrics.csv"));
    const Run ev = run({"evaluate", "--data", data, "--pred", (root / "pred").string(), "--regime", "longest", "--out",
                        (root / "report").string()});
    REQUIRE(ev.code == 0);
    const auto report = nlohmann::json::parse(read_text_file(root / "report" / "report.json"));
    CHECK(report["jaccard"]["mean"] == 1.0);
    for (const char* key : {"jaccard", "boundary_errors", "buckets", "correlations_longest", "correlations_all",
                            "quartile_agreement"}) {
        CHECK(report.contains(key));
    }
    CHECK_FALSE(report.contains("mcnemar"));
    const std::string scatter = read_text_file(root / "report" / "scatter.csv");
    CHECK(scatter.rfind("task_id,metric_name,procedure_id,gt_value,pred_value\n", 0) == 0);
    const auto manifest = nlohmann::json::parse(read_text_file(root / "report" / "manifest.json"));
    CHECK(manifest["regime"] == "longest");
    CHECK(manifest["thresholds_s"].size() == 3);
}

TEST_CASE("single-file postprocess") {
    const fs::path root = scratch("single");
    REQUIRE(run(small_generate(root / "data")).code == 0);
    REQUIRE(run({"perturb", "--data", (root / "data").string(), "--spike-rate", "2"}).code == 0);
    const Run r = run({"postprocess", "--in", (root / "data" / "p01" / "labels_pred.csv").string(), "--window", "31",
                       "--out", (root / "pred").string()});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(root / "pred" / "labels.csv"));
    CHECK(fs::exists(root / "pred" / "annotation.csv"));
    const auto manifest = nlohmann::json::parse(read_text_file(root / "pred" / "manifest.json"));
    CHECK(manifest["window"] == 31);
}

TEST_CASE("compare and evaluate with a second model") {
    const fs::path root = scratch("compare");
    const std::string data = (root / "data").string();
    REQUIRE(run(small_generate(data)).code == 0);
    REQUIRE(run({"perturb", "--data", data, "--spike-rate", "3", "--out", (root / "raw").string(), "--out-name", "labels.csv"}).code == 0);
    REQUIRE(run({"postprocess", "--in", (root / "raw").string(), "--in-name", "labels.csv", "--window", "31", "--out",
                 (root / "filtered").string()}).code == 0);
    const Run c = run({"compare", "--data", data, "--pred-a", (root / "filtered").string(), "--pred-b",
                       (root / "raw").string(), "--out", (root / "cmp").string()});
    REQUIRE(c.code == 0);
    const auto mc = nlohmann::json::parse(read_text_file(root / "cmp" / "mcnemar.json"));
    CHECK(mc.contains("chi2"));
    CHECK(mc.contains("p_value"));
    const Run e = run({"evaluate", "--data", data, "--pred", (root / "filtered").string(), "--pred-b",
                       (root / "raw").string(), "--out", (root / "report").string()});
    REQUIRE(e.code == 0);
    CHECK(nlohmann::json::parse(read_text_file(root / "report" / "report.json")).contains("mcnemar"));
}

TEST_CASE("exit codes") {
    const fs::path root = scratch("codes");
    SUBCASE("usage error prints help") {
        const Run r = run({"evaluate", "--data", "x"});
        CHECK(r.code == kExitValidation);
        CHECK(r.err.find("labels.csv") != std::string::npos);
    }
    SUBCASE("no subcommand") { CHECK(run({}).code == kExitValidation); }
    SUBCASE("help") { CHECK(run({"--help"}).code == 0); }
    SUBCASE("even window") {
        REQUIRE(run(small_generate(root / "data")).code == 0);
        const Run r = run({"postprocess", "--in", (root / "data").string(), "--in-name", "labels.csv", "--window", "300",
                           "--out", (root / "p").string()});
        CHECK(r.code == kExitValidation);
        CHECK(r.err.find("EvenWindow") != std::string::npos);
    }
    SUBCASE("bad regime") {
        REQUIRE(run(small_generate(root / "data")).code == 0);
        CHECK(run({"metrics", "--data", (root / "data").string(), "--regime", "some", "--out", (root / "m").string()}).code ==
              kExitValidation);
    }
    SUBCASE("missing directory") {
        CHECK(run({"metrics", "--data", (root / "nope").string(), "--out", (root / "m").string()}).code == kExitIo);
    }
    SUBCASE("malformed file names file and line") {
        REQUIRE(run(small_generate(root / "data")).code == 0);
        write_text_file(root / "data" / "p02" / "events.csv", "t_s,kind\n1,energy_on\n2,teleport\n");
        const Run r = run({"metrics", "--data", (root / "data").string(), "--out", (root / "m").string()});
        CHECK(r.code == kExitValidation);
        CHECK(r.err.find("events.csv:3") != std::string::npos);
    }
}

TEST_CASE("re-running a command gives byte-identical output") {
    const fs::path root = scratch("repeat");
    const std::string data = (root / "data").string();
    REQUIRE(run(small_generate(data)).code == 0);
    REQUIRE(run({"perturb", "--data", data, "--jitter", "20", "--spike-rate", "1"}).code == 0);
    REQUIRE(run({"postprocess", "--in", data, "--window", "31", "--out", (root / "pred").string()}).code == 0);
    const auto eval = [&](const std::string& out, const std::string& jobs) {
        return run({"evaluate", "--data", data, "--pred", (root / "pred").string(), "--regime", "all", "--jobs", jobs,
                    "--out", out});
    };
    REQUIRE(eval((root / "a").string(), "1").code == 0);
    REQUIRE(eval((root / "b").string(), "3").code == 0);
    CHECK(read_text_file(root / "a" / "report.json") == read_text_file(root / "b" / "report.json"));
    CHECK(read_text_file(root / "a" / "scatter.csv") == read_text_file(root / "b" / "scatter.csv"));
}

TEST_CASE("registry override") {
    const fs::path root = scratch("registry");
    const std::string data = (root / "data").string();
    REQUIRE(run(small_generate(data)).code == 0);
    write_text_file(root / "reg.json",
                    R"([{"name": "path1", "source": "kinematic", "definition": {"type": "PathLength", "manipulator": "PSM1"}, "aggregation": "Additive"}])");
    REQUIRE(run({"metrics", "--data", data, "--registry", (root / "reg.json").string(), "--out", (root / "m").string()}).code == 0);
    const std::string csv = read_text_file(root / "m" / "metrics.csv");
    CHECK(csv.find("path1") != std::string::npos);
    CHECK(csv.find("event_count") == std::string::npos);

    write_text_file(root / "bad.json",
                    R"([{"name": "x", "source": "kinematic", "definition": {"type": "PathLength", "manipulator": "ECM"}, "aggregation": "Additive"}])");
    CHECK(run({"metrics", "--data", data, "--registry", (root / "bad.json").string(), "--out", (root / "m2").string()}).code ==
          kExitValidation);
}
