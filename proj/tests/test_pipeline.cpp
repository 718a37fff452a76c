#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "helpers.hpp"
#include "mrgen/pipeline.hpp"

using namespace mrgen;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config(const std::string& out_dir, std::uint64_t seed) {
    PipelineConfig c;
    c.subject_path = testhelpers::fixture_path("pow");
    c.out_dir = out_dir;
    c.seed = seed;
    c.train_base = 60;
    c.train_budget = 200;
    c.filter_size = 150;
    c.eval_size = 100;
    c.transform_count = 2;
    c.max_correct = 120;
    c.max_incorrect = 300;
    c.evolution.population_size = 60;
    c.evolution.generations = 10;
    c.evolution.output_count = 4;
    c.filter.search_budget = 800;
    c.deterministic = true;
    return c;
}

std::string slurp(const fs::path& p) {
    return testhelpers::read_file(p.string());
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("full pipeline produces artifacts and a coherent report") {
    TempDir dir("mrgen_pipeline_full");
    PipelineConfig config = small_config(dir.path.string(), 5);
    RunReport report = run_pipeline(config);

    CHECK(report.subject == "pow");
    for (const char* name :
         {"train_corpus.tsv", "filter_corpus.tsv", "eval_corpus.tsv",
          "mutants.tsv", "mutant_split.tsv", "transforms.txt", "verdicts.tsv",
          "report.json", "report.txt"}) {
        CAPTURE(name);
        CHECK(fs::exists(dir.path / name));
    }

    CHECK(report.eval_mutant_count >= 8);
    CHECK(report.pz >= 0.0);
    CHECK(report.pz <= 1.0);
    CHECK(report.baseline_ms >= 0.0);
    std::size_t generated = 0;
    for (const auto& tr : report.transforms) generated += tr.mrs.size();
    CHECK(generated >= 1);

    // valid MRs carry an MS; invalid ones are pinned to zero
    for (const auto& tr : report.transforms)
        for (const auto& mr : tr.mrs)
            if (!mr.verdict.valid) CHECK(mr.eval_ms == 0.0);

    // report.json parses and mirrors the numbers
    auto doc = nlohmann::json::parse(slurp(dir.path / "report.json"));
    CHECK(doc["eval"]["ms"].get<double>() == report.ms);
    CHECK(doc["provenance"]["seed"].get<std::uint64_t>() == 5);
}

TEST_CASE("run-all equals the staged composition byte-for-byte") {
    TempDir all_dir("mrgen_pipeline_all");
    TempDir staged_dir("mrgen_pipeline_staged");
    PipelineConfig all = small_config(all_dir.path.string(), 9);
    PipelineConfig staged = small_config(staged_dir.path.string(), 9);

    run_pipeline(all);
    stage_gen_inputs(staged);
    stage_gen_mutants(staged);
    stage_collect(staged);
    stage_evolve(staged);
    stage_filter(staged);
    write_report(staged);

    for (const auto& entry : fs::directory_iterator(all_dir.path)) {
        fs::path twin = staged_dir.path / entry.path().filename();
        CAPTURE(entry.path().filename().string());
        REQUIRE(fs::exists(twin));
        CHECK(slurp(entry.path()) == slurp(twin));
    }
}

TEST_CASE("deterministic reruns are byte-identical") {
    TempDir a("mrgen_pipeline_det_a");
    TempDir b("mrgen_pipeline_det_b");
    run_pipeline(small_config(a.path.string(), 31));
    run_pipeline(small_config(b.path.string(), 31));
    CHECK(slurp(a.path / "report.json") == slurp(b.path / "report.json"));
    CHECK(slurp(a.path / "report.txt") == slurp(b.path / "report.txt"));

    TempDir c("mrgen_pipeline_det_c");
    run_pipeline(small_config(c.path.string(), 32));
    CHECK(slurp(a.path / "report.json") != slurp(c.path / "report.json"));
}

TEST_CASE("explicit transform descriptors pin the input relations") {
    TempDir dir("mrgen_pipeline_explicit");
    PipelineConfig config = small_config(dir.path.string(), 2);
    config.explicit_transforms = {"NumericAddition(param=1, c=-1)"};
    run_pipeline(config);
    CHECK(slurp(dir.path / "transforms.txt") ==
          "NumericAddition(param=1, c=-1)\n");
    CHECK(fs::exists(dir.path / "mrs_NumericAddition_p1_cm1.json"));
}

TEST_CASE("stage-dependency and configuration errors") {
    TempDir dir("mrgen_pipeline_errors");
    PipelineConfig config = small_config(dir.path.string(), 3);

    try {
        stage_evolve(config);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.exit_code == 3);
        CHECK(std::string(e.what()).find("run the producing stage first") !=
              std::string::npos);
    }

    PipelineConfig missing = config;
    missing.subject_path = "/nonexistent/path.mu";
    try {
        stage_gen_inputs(missing);
        FAIL("expected a config error");
    } catch (const StageError& e) {
        CHECK(e.exit_code == 2);
    }

    // stale mutant artifacts are detected
    stage_gen_inputs(config);
    stage_gen_mutants(config);
    PipelineConfig other = config;
    other.mutant_eval_fraction = 0.8;
    CHECK_THROWS_AS(detail::load_split(
                        detail::load_subject(other, "test"), other, "test"),
                    StageError);
}

TEST_CASE("corpora for the three purposes draw from disjoint seed streams") {
    TempDir dir("mrgen_pipeline_seeds");
    PipelineConfig config = small_config(dir.path.string(), 77);
    stage_gen_inputs(config);
    std::string train = slurp(dir.path / "train_corpus.tsv");
    std::string filter = slurp(dir.path / "filter_corpus.tsv");
    std::string eval = slurp(dir.path / "eval_corpus.tsv");
    CHECK(train != filter);
    CHECK(filter != eval);
    CHECK(train != eval);
}

TEST_CASE("config serialization round-trips the knobs") {
    PipelineConfig c = small_config("x", 4);
    c.evolution.p_crossover = 0.75;
    c.filter.search_budget = 12345;
    c.explicit_transforms = {"SequenceFlip(param=0)"};
    nlohmann::json j = config_to_json(c);
    PipelineConfig back;
    config_from_json(j, back);
    CHECK(back.seed == c.seed);
    CHECK(back.train_base == c.train_base);
    CHECK(back.evolution.p_crossover == 0.75);
    CHECK(back.filter.search_budget == 12345);
    CHECK(back.explicit_transforms == c.explicit_transforms);
    CHECK(config_to_json(back) == j);
}

TEST_CASE("paper preset carries the table-scale parameters") {
    PipelineConfig paper = paper_pipeline_config();
    CHECK(paper.max_correct == 9000);
    CHECK(paper.max_incorrect == 9000);
    CHECK(paper.evolution.population_size == 1000);
    CHECK(paper.evolution.migration_count == 160);
    CHECK(paper.evolution.time_budget_seconds == 1800.0);
    CHECK(paper.evolution.elite_size == 10);
    CHECK(paper.evolution.migration_period == 10);
    CHECK(paper.evolution.p_crossover == 0.9);
    CHECK(paper.evolution.p_mutation == 0.3);
    CHECK(paper.evolution.size_bound == 16);
}
