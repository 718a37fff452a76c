// Pipeline CLI: seeded end-to-end runs, individually rerunnable stages, and
// human-readable rendering of generated metamorphic relations.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mrgen/pipeline.hpp"

namespace {

using namespace mrgen;

Signature signature_from_mrs_doc(const nlohmann::json& doc) {
    Signature sig;
    for (const auto& p : doc.at("params")) {
        std::string name = p.at(0).get<std::string>();
        std::string tag = p.at(1).get<std::string>();
        sig.params.emplace_back(name, tag == "bool"  ? TypeTag::Bool
                                      : tag == "num" ? TypeTag::Num
                                                     : TypeTag::Seq);
    }
    std::string out = doc.at("output").get<std::string>();
    sig.output = out == "bool" ? TypeTag::Bool
                 : out == "num" ? TypeTag::Num
                                : TypeTag::Seq;
    return sig;
}

int render_mr_command(const std::string& mrs_path, std::size_t index) {
    std::ifstream in(mrs_path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open '" << mrs_path << "'\n";
        return 3;
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: bad relation file: " << e.what() << "\n";
        return 3;
    }
    const auto& mrs = doc.at("mrs");
    if (index >= mrs.size()) {
        std::cerr << "error: relation index " << index << " out of range ("
                  << mrs.size() << " available)\n";
        return 2;
    }
    Signature sig = signature_from_mrs_doc(doc);
    std::string subject = doc.at("subject").get<std::string>();
    std::string input_relation = doc.at("inputRelation").get<std::string>();
    RelationExpr expr =
        parse_prefix(mrs[index].at("prefix").get<std::string>(), sig);
    const auto& fit = mrs[index].at("fitness");

    std::string source_args, followup_args;
    for (std::size_t i = 0; i < sig.params.size(); ++i) {
        if (i) {
            source_args += ", ";
            followup_args += ", ";
        }
        source_args += sig.params[i].first + "_s";
        followup_args += sig.params[i].first + "_f";
    }

    std::cout << "transform:       " << doc.at("transform").get<std::string>()
              << "\n";
    std::cout << "input relation:  " << input_relation << "\n";
    std::cout << "output relation: " << render_infix(expr) << "\n";
    std::cout << "fitness:         fp=" << fit.at("fp").get<long>()
              << " fn=" << fit.at("fn").get<long>()
              << " size=" << fit.at("size").get<long>() << "\n\n";
    std::cout << "// executable sketch\n";
    std::cout << "o_s = " << subject << "(" << source_args << ");\n";
    std::cout << "o_f = " << subject << "(" << followup_args << ");\n";
    std::cout << "if (" << input_relation << ") {\n";
    std::cout << "    assert(" << render_infix(expr) << ");\n";
    std::cout << "}\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"metamorphic relation generator for small subject functions"};
    app.require_subcommand(1);

    std::string subject, out_dir = "out", preset = "desk", config_file;
    std::uint64_t seed = 1;
    std::size_t transform_count = 0;
    std::vector<std::string> explicit_transforms;
    bool deterministic = false;

    std::size_t train_base = 0, train_budget = 0, filter_size = 0,
                eval_size = 0;
    double eval_fraction = -1;
    std::size_t population = 0, generations = 0, elite = 0, migration_period = 0,
                migration_count = 0, size_bound = 0, output_count = 0,
                search_budget = 0, caps_correct = 0, caps_incorrect = 0;
    double tolerance = -1, time_budget = -1;

    app.add_option("--subject", subject, "path to the subject .mu file");
    app.add_option("--seed", seed, "master seed (all stages derive from it)");
    app.add_option("--preset", preset, "desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--out", out_dir, "artifact directory");
    app.add_option("--config", config_file, "JSON config file");
    app.add_option("--transforms", transform_count,
                   "number of transform instantiations to sample");
    app.add_option("--transform", explicit_transforms,
                   "explicit transform descriptor (repeatable; overrides "
                   "sampling)");
    app.add_flag("--deterministic", deterministic,
                 "single-threaded, byte-reproducible artifacts");
    app.add_option("--train-base", train_base, "train corpus base size");
    app.add_option("--train-budget", train_budget,
                   "coverage-guided evaluation budget");
    app.add_option("--filter-size", filter_size, "filter corpus size");
    app.add_option("--eval-size", eval_size, "eval corpus size");
    app.add_option("--eval-fraction", eval_fraction,
                   "fraction of mutants held out for evaluation");
    app.add_option("--population", population, "population size");
    app.add_option("--generations", generations, "generations per run");
    app.add_option("--time-budget", time_budget,
                   "evolution wall-clock budget in seconds (0 disables)");
    app.add_option("--elite", elite, "elite size");
    app.add_option("--migration-period", migration_period,
                   "generations between migrations");
    app.add_option("--migration-count", migration_count,
                   "individuals exchanged per migration");
    app.add_option("--size-bound", size_bound, "output relation node bound");
    app.add_option("--output-count", output_count,
                   "relations returned per transform");
    app.add_option("--search-budget", search_budget,
                   "step-2 counterexample search budget");
    app.add_option("--caps-correct", caps_correct, "max correct executions");
    app.add_option("--caps-incorrect", caps_incorrect,
                   "max incorrect executions");
    app.add_option("--tolerance", tolerance, "numeric equality tolerance");

    auto* gen_inputs = app.add_subcommand("gen-inputs", "generate corpora");
    auto* gen_mutants = app.add_subcommand("gen-mutants", "generate mutants");
    auto* collect = app.add_subcommand(
        "collect", "choose transforms and cache execution pairs");
    auto* evolve_cmd =
        app.add_subcommand("evolve", "search output relations per store");
    auto* filter_cmd =
        app.add_subcommand("filter", "two-step validity filtering");
    auto* evaluate =
        app.add_subcommand("evaluate", "score surviving relations");
    auto* run_all = app.add_subcommand("run-all", "all six stages in order");

    auto* render = app.add_subcommand("render-mr",
                                      "print one generated relation readably");
    std::string mrs_file;
    std::size_t mr_index = 0;
    render->add_option("--mrs", mrs_file, "mrs_<transform>.json file")
        ->required();
    render->add_option("--index", mr_index, "relation index in the file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (render->parsed()) return render_mr_command(mrs_file, mr_index);

    PipelineConfig config;
    if (preset == "paper") config = paper_pipeline_config();
    if (!config_file.empty()) {
        std::ifstream in(config_file, std::ios::binary);
        if (!in) {
            std::cerr << "error: cannot open config '" << config_file << "'\n";
            return 2;
        }
        try {
            nlohmann::json j;
            in >> j;
            config_from_json(j, config);
        } catch (const nlohmann::json::exception& e) {
            std::cerr << "error: bad config file: " << e.what() << "\n";
            return 2;
        }
    }

    if (app.count("--subject")) config.subject_path = subject;
    if (app.count("--seed")) config.seed = seed;
    if (app.count("--out")) config.out_dir = out_dir;
    if (app.count("--transforms")) config.transform_count = transform_count;
    if (app.count("--transform"))
        config.explicit_transforms = explicit_transforms;
    if (app.count("--deterministic")) config.deterministic = true;
    if (app.count("--train-base")) config.train_base = train_base;
    if (app.count("--train-budget")) config.train_budget = train_budget;
    if (app.count("--filter-size")) config.filter_size = filter_size;
    if (app.count("--eval-size")) config.eval_size = eval_size;
    if (app.count("--eval-fraction"))
        config.mutant_eval_fraction = eval_fraction;
    if (app.count("--population"))
        config.evolution.population_size = population;
    if (app.count("--generations")) config.evolution.generations = generations;
    if (app.count("--time-budget"))
        config.evolution.time_budget_seconds = time_budget;
    if (app.count("--elite")) config.evolution.elite_size = elite;
    if (app.count("--migration-period"))
        config.evolution.migration_period = migration_period;
    if (app.count("--migration-count"))
        config.evolution.migration_count = migration_count;
    if (app.count("--size-bound")) config.evolution.size_bound = size_bound;
    if (app.count("--output-count"))
        config.evolution.output_count = output_count;
    if (app.count("--search-budget"))
        config.filter.search_budget = search_budget;
    if (app.count("--caps-correct")) config.max_correct = caps_correct;
    if (app.count("--caps-incorrect")) config.max_incorrect = caps_incorrect;
    if (app.count("--tolerance")) config.evolution.num_tolerance = tolerance;

    try {
        if (gen_inputs->parsed()) {
            stage_gen_inputs(config);
        } else if (gen_mutants->parsed()) {
            stage_gen_mutants(config);
        } else if (collect->parsed()) {
            stage_collect(config);
        } else if (evolve_cmd->parsed()) {
            stage_evolve(config);
        } else if (filter_cmd->parsed()) {
            stage_filter(config);
        } else if (evaluate->parsed()) {
            RunReport report = write_report(config);
            std::cout << render_report_table(report);
        } else if (run_all->parsed()) {
            RunReport report = run_pipeline(config);
            std::cout << render_report_table(report);
        }
    } catch (const StageError& e) {
        std::cerr << "error [" << e.stage << "]: " << e.what() << "\n";
        return e.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
