#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrgen/evolve.hpp"
#include "mrgen/exec_store.hpp"
#include "mrgen/inputgen.hpp"
#include "mrgen/mutate.hpp"
#include "mrgen/transforms.hpp"
#include "mrgen/validate.hpp"

// End-to-end orchestration. Each stage consumes and produces files under
// the output directory so stages can be rerun independently; run_pipeline
// is exactly the six stages in sequence. All randomness is derived from the
// master seed through documented tags, so a stage rerun agrees with a full
// run.

namespace mrgen {

struct PipelineConfig {
    std::string subject_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;

    std::size_t train_base = 500;    // always-retained random cases
    std::size_t train_budget = 2000; // coverage-guided evaluations
    std::size_t filter_size = 1000;
    std::size_t eval_size = 1000;

    double mutant_eval_fraction = 0.5;
    std::size_t transform_count = 4;
    std::vector<std::string> explicit_transforms; // overrides sampling

    std::size_t max_correct = 1500;
    std::size_t max_incorrect = 1500;

    EvolutionConfig evolution;
    FilterOptions filter;
    GenProfile profile;

    bool deterministic = false;
};

/// Table-scale preset: 9,000-pair caps and the large evolution settings.
inline PipelineConfig paper_pipeline_config() {
    PipelineConfig c;
    c.max_correct = 9000;
    c.max_incorrect = 9000;
    c.evolution = paper_evolution_config();
    return c;
}

struct StageError : std::runtime_error {
    StageError(std::string stage, const std::string& message, int exit_code = 3)
        : std::runtime_error(message), stage(std::move(stage)),
          exit_code(exit_code) {}
    std::string stage;
    int exit_code;
};

// ---------------------------------------------------------------------------
// Report structures

struct MrReport {
    std::string id;
    MetamorphicRelation mr;
    Fitness fit;
    FilterVerdict verdict;
    double eval_ms = 0.0; // zero unless the verdict is valid
    std::vector<std::string> killed_ids;
};

struct TransformReport {
    InputTransform transform;
    std::string rendering;
    std::vector<MrReport> mrs;
};

struct RunReport {
    std::string subject;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string subject_hash;
    std::vector<TransformReport> transforms;
    double ms = 0.0;          // union over valid relations, trivial kills included
    double pz = 0.0;          // valid / generated
    std::optional<double> pzo;   // step-2 pass / step-1 pass
    std::optional<double> delta; // over baseline survivors
    double baseline_ms = 0.0;
    long trivial_kills = 0;
    std::size_t eval_mutant_count = 0;
};

// ---------------------------------------------------------------------------
// Small file and naming helpers

namespace detail {

inline std::string read_text_file(const std::string& path, const char* stage) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw StageError(stage, "missing '" + path + "' — run the producing stage first");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::filesystem::create_directories(
        std::filesystem::path(path).parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

inline std::string fnv_hash_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

inline std::string transform_slug(const InputTransform& t) {
    std::string slug = transform_kind_name(t.kind);
    slug += "_p" + std::to_string(t.param_a);
    if (t.kind == TransformKind::PermuteParameters)
        slug += "_p" + std::to_string(t.param_b);
    if (transform_kind_parameterized(t.kind)) {
        std::string c = render_num(t.constant);
        for (char& ch : c) {
            if (ch == '-') ch = 'm';
            if (ch == '.') ch = 'd';
        }
        slug += "_c" + c;
    }
    return slug;
}

inline std::string out_path(const PipelineConfig& config, const std::string& name) {
    return (std::filesystem::path(config.out_dir) / name).string();
}

} // namespace detail

// ---------------------------------------------------------------------------
// Config (de)serialization: used for --config files and provenance hashing

inline nlohmann::json config_to_json(const PipelineConfig& c) {
    return {
        {"subject", c.subject_path},
        {"out", c.out_dir},
        {"seed", c.seed},
        {"corpus",
         {{"trainBase", c.train_base},
          {"trainBudget", c.train_budget},
          {"filterSize", c.filter_size},
          {"evalSize", c.eval_size}}},
        {"mutants", {{"evalFraction", c.mutant_eval_fraction}}},
        {"transforms",
         {{"count", c.transform_count}, {"explicit", c.explicit_transforms}}},
        {"caps", {{"correct", c.max_correct}, {"incorrect", c.max_incorrect}}},
        {"evolution",
         {{"populationSize", c.evolution.population_size},
          {"generations", c.evolution.generations},
          {"timeBudgetSeconds", c.evolution.time_budget_seconds},
          {"pCrossover", c.evolution.p_crossover},
          {"pMutation", c.evolution.p_mutation},
          {"tournamentK", c.evolution.tournament_k},
          {"pBestMatch", c.evolution.p_best_match},
          {"eliteSize", c.evolution.elite_size},
          {"migrationPeriod", c.evolution.migration_period},
          {"migrationCount", c.evolution.migration_count},
          {"sizeBound", c.evolution.size_bound},
          {"constantDelta", c.evolution.constant_delta},
          {"numTolerance", c.evolution.num_tolerance},
          {"outputCount", c.evolution.output_count}}},
        {"filter",
         {{"searchBudget", c.filter.search_budget},
          {"searchRestarts", c.filter.search_restarts}}},
        {"deterministic", c.deterministic}};
}

inline void config_from_json(const nlohmann::json& j, PipelineConfig& c) {
    if (j.contains("subject")) c.subject_path = j["subject"].get<std::string>();
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("corpus")) {
        const auto& k = j["corpus"];
        if (k.contains("trainBase")) c.train_base = k["trainBase"].get<std::size_t>();
        if (k.contains("trainBudget")) c.train_budget = k["trainBudget"].get<std::size_t>();
        if (k.contains("filterSize")) c.filter_size = k["filterSize"].get<std::size_t>();
        if (k.contains("evalSize")) c.eval_size = k["evalSize"].get<std::size_t>();
    }
    if (j.contains("mutants") && j["mutants"].contains("evalFraction"))
        c.mutant_eval_fraction = j["mutants"]["evalFraction"].get<double>();
    if (j.contains("transforms")) {
        const auto& k = j["transforms"];
        if (k.contains("count")) c.transform_count = k["count"].get<std::size_t>();
        if (k.contains("explicit"))
            c.explicit_transforms = k["explicit"].get<std::vector<std::string>>();
    }
    if (j.contains("caps")) {
        const auto& k = j["caps"];
        if (k.contains("correct")) c.max_correct = k["correct"].get<std::size_t>();
        if (k.contains("incorrect")) c.max_incorrect = k["incorrect"].get<std::size_t>();
    }
    if (j.contains("evolution")) {
        const auto& k = j["evolution"];
        auto& e = c.evolution;
        if (k.contains("populationSize")) e.population_size = k["populationSize"].get<std::size_t>();
        if (k.contains("generations")) e.generations = k["generations"].get<std::size_t>();
        if (k.contains("timeBudgetSeconds")) e.time_budget_seconds = k["timeBudgetSeconds"].get<double>();
        if (k.contains("pCrossover")) e.p_crossover = k["pCrossover"].get<double>();
        if (k.contains("pMutation")) e.p_mutation = k["pMutation"].get<double>();
        if (k.contains("tournamentK")) e.tournament_k = k["tournamentK"].get<std::size_t>();
        if (k.contains("pBestMatch")) e.p_best_match = k["pBestMatch"].get<double>();
        if (k.contains("eliteSize")) e.elite_size = k["eliteSize"].get<std::size_t>();
        if (k.contains("migrationPeriod")) e.migration_period = k["migrationPeriod"].get<std::size_t>();
        if (k.contains("migrationCount")) e.migration_count = k["migrationCount"].get<std::size_t>();
        if (k.contains("sizeBound")) e.size_bound = k["sizeBound"].get<std::size_t>();
        if (k.contains("constantDelta")) e.constant_delta = k["constantDelta"].get<double>();
        if (k.contains("numTolerance")) e.num_tolerance = k["numTolerance"].get<double>();
        if (k.contains("outputCount")) e.output_count = k["outputCount"].get<std::size_t>();
    }
    if (j.contains("filter")) {
        const auto& k = j["filter"];
        if (k.contains("searchBudget")) c.filter.search_budget = k["searchBudget"].get<std::size_t>();
        if (k.contains("searchRestarts")) c.filter.search_restarts = k["searchRestarts"].get<int>();
    }
    if (j.contains("deterministic")) c.deterministic = j["deterministic"].get<bool>();
}

// ---------------------------------------------------------------------------
// Shared stage plumbing

namespace detail {

inline SubjectProgram load_subject(const PipelineConfig& config,
                                   const char* stage) {
    if (config.subject_path.empty())
        throw StageError(stage, "no subject file configured", 2);
    std::ifstream in(config.subject_path, std::ios::binary);
    if (!in)
        throw StageError(stage,
                         "subject file '" + config.subject_path + "' not found",
                         2);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_program(ss.str());
    } catch (const MulangError& e) {
        throw StageError(stage,
                         "subject does not parse: " + std::string(e.what()) +
                             " (line " + std::to_string(e.line) + ")",
                         2);
    }
}

inline FilterOptions effective_filter_options(const PipelineConfig& config) {
    FilterOptions opts = config.filter;
    opts.num_tolerance = config.evolution.num_tolerance;
    opts.profile = config.profile;
    return opts;
}

inline std::vector<Mutant> regenerate_mutants(const SubjectProgram& program,
                                              const PipelineConfig& config,
                                              const char* stage) {
    std::string manifest =
        read_text_file(out_path(config, "mutants.tsv"), stage);
    auto mutants = generate_mutants(program);
    std::string regenerated = render_manifest(mutants);
    if (regenerated != manifest)
        throw StageError(stage, "mutant manifest is stale — rerun gen-mutants");
    return mutants;
}

inline MutantSet load_split(const SubjectProgram& program,
                            const PipelineConfig& config, const char* stage) {
    auto mutants = regenerate_mutants(program, config, stage);
    std::string split_text =
        read_text_file(out_path(config, "mutant_split.tsv"), stage);
    MutantSet set = split_mutants(mutants, config.mutant_eval_fraction,
                                  config.seed);
    std::string rendered;
    for (const Mutant& m : set.train) rendered += m.id + "\ttrain\n";
    for (const Mutant& m : set.eval) rendered += m.id + "\teval\n";
    if (rendered != split_text)
        throw StageError(stage, "mutant split is stale — rerun gen-mutants");
    return set;
}

inline std::vector<InputTransform> load_transforms(const PipelineConfig& config,
                                                   const char* stage) {
    std::string text =
        read_text_file(out_path(config, "transforms.txt"), stage);
    std::vector<InputTransform> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(parse_transform_descriptor(line));
    if (out.empty()) throw StageError(stage, "transforms.txt is empty");
    return out;
}

inline Corpus load_corpus(const PipelineConfig& config, const char* name,
                          CorpusPurpose purpose, const char* stage) {
    Corpus corpus =
        parse_corpus(read_text_file(out_path(config, name), stage));
    corpus.purpose = purpose;
    return corpus;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Stages

/// Step 1 and the filter/eval corpora: coverage-guided training inputs plus
/// plain random corpora in disjoint seed namespaces.
inline void stage_gen_inputs(const PipelineConfig& config) {
    SubjectProgram program = detail::load_subject(config, "gen-inputs");
    Corpus train = generate_coverage_guided(
        program, config.train_budget, derive_seed(config.seed, "corpus.train"),
        config.profile, config.train_base, config.filter.step_budget);
    train.purpose = CorpusPurpose::Train;
    Corpus filter = generate_random_inputs(
        program.signature, config.filter_size,
        derive_seed(config.seed, "corpus.filter"), config.profile);
    filter.purpose = CorpusPurpose::Filter;
    Corpus eval = generate_random_inputs(
        program.signature, config.eval_size,
        derive_seed(config.seed, "corpus.eval"), config.profile);
    eval.purpose = CorpusPurpose::Eval;
    detail::write_text_file(detail::out_path(config, "train_corpus.tsv"),
                            render_corpus(train));
    detail::write_text_file(detail::out_path(config, "filter_corpus.tsv"),
                            render_corpus(filter));
    detail::write_text_file(detail::out_path(config, "eval_corpus.tsv"),
                            render_corpus(eval));
}

/// Step 2: the mutant manifest and the disjoint train/eval split.
inline void stage_gen_mutants(const PipelineConfig& config) {
    SubjectProgram program = detail::load_subject(config, "gen-mutants");
    auto mutants = generate_mutants(program);
    detail::write_text_file(detail::out_path(config, "mutants.tsv"),
                            render_manifest(mutants));
    MutantSet set =
        split_mutants(mutants, config.mutant_eval_fraction, config.seed);
    std::string split;
    for (const Mutant& m : set.train) split += m.id + "\ttrain\n";
    for (const Mutant& m : set.eval) split += m.id + "\teval\n";
    detail::write_text_file(detail::out_path(config, "mutant_split.tsv"), split);
}

/// Steps 3 and 4: pick the input transformations (explicit descriptors or
/// constant-pool-weighted sampling) and cache one capped store per
/// transformation.
inline void stage_collect(const PipelineConfig& config) {
    SubjectProgram program = detail::load_subject(config, "collect");
    Corpus train = detail::load_corpus(config, "train_corpus.tsv",
                                       CorpusPurpose::Train, "collect");
    MutantSet set = detail::load_split(program, config, "collect");

    std::vector<InputTransform> chosen;
    if (!config.explicit_transforms.empty()) {
        for (const std::string& desc : config.explicit_transforms)
            chosen.push_back(parse_transform_descriptor(desc));
    } else {
        std::vector<ExecutionTrace> traces;
        for (const InputCase& c : train.cases)
            traces.push_back(
                run_function(program, c.values, config.filter.step_budget)
                    .trace);
        ConstantPool pool = mine_constants(traces);
        auto applicable = enumerate_applicable(program.signature, pool);
        chosen = sample_instantiations(
            applicable, config.transform_count,
            derive_seed(config.seed, "transforms.sample"));
        if (chosen.size() < config.transform_count)
            std::fprintf(stderr,
                         "warning: only %zu applicable transforms "
                         "(%zu requested); using all of them\n",
                         chosen.size(), config.transform_count);
    }

    std::string listing;
    for (const InputTransform& t : chosen)
        listing += transform_descriptor(t) + "\n";
    detail::write_text_file(detail::out_path(config, "transforms.txt"), listing);

    for (const InputTransform& t : chosen) {
        CollectOptions opts;
        opts.max_correct = config.max_correct;
        opts.max_incorrect = config.max_incorrect;
        opts.step_budget = config.filter.step_budget;
        ExecutionStore store =
            collect_executions(program, set.train, train, t, opts);
        filter_and_sample(
            store, {config.max_correct, config.max_incorrect},
            derive_seed(config.seed,
                        "store.sample." + transform_descriptor(t)));
        save_store(store, detail::out_path(
                              config, "store_" + detail::transform_slug(t) +
                                          ".jsonl"));
    }
}

/// Step 5: evolve one relation set per cached store.
inline void stage_evolve(const PipelineConfig& config) {
    SubjectProgram program = detail::load_subject(config, "evolve");
    auto transforms = detail::load_transforms(config, "evolve");
    for (const InputTransform& t : transforms) {
        std::string slug = detail::transform_slug(t);
        ExecutionStore store = store_from_jsonl(detail::read_text_file(
            detail::out_path(config, "store_" + slug + ".jsonl"), "evolve"));

        EvolutionConfig evo = config.evolution;
        evo.seed = derive_seed(config.seed, "evolve." + transform_descriptor(t));
        evo.parallel = !config.deterministic;
        InputRelationSpec rel = canonical_relation(t, program.signature);
        auto result = evolve(rel, store, evo);

        nlohmann::json mrs = nlohmann::json::array();
        for (const EvolvedMr& e : result) {
            mrs.push_back({{"prefix", render_prefix(e.mr.output_relation)},
                           {"infix", render_infix(e.mr.output_relation)},
                           {"fitness",
                            {{"fp", e.fit.fp},
                             {"fn", e.fit.fn},
                             {"size", e.fit.size}}}});
        }
        nlohmann::json params = nlohmann::json::array();
        for (const auto& [name, tag] : program.signature.params)
            params.push_back({name, tag_name(tag)});
        nlohmann::json doc = {{"subject", program.name},
                              {"params", params},
                              {"output", tag_name(program.signature.output)},
                              {"transform", transform_descriptor(t)},
                              {"inputRelation", rel.rendering},
                              {"mrs", mrs}};
        detail::write_text_file(detail::out_path(config, "mrs_" + slug + ".json"),
                                doc.dump(2) + "\n");
    }
}

namespace detail {

struct LoadedMrs {
    InputTransform transform;
    InputRelationSpec rel;
    std::vector<MetamorphicRelation> mrs;
    std::vector<Fitness> fits;
    std::vector<std::string> ids;
};

inline std::vector<LoadedMrs> load_mrs(const SubjectProgram& program,
                                       const PipelineConfig& config,
                                       const char* stage) {
    std::vector<LoadedMrs> out;
    for (const InputTransform& t : load_transforms(config, stage)) {
        std::string slug = transform_slug(t);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(read_text_file(
                out_path(config, "mrs_" + slug + ".json"), stage));
        } catch (const nlohmann::json::exception& e) {
            throw StageError(stage, "bad mrs_" + slug + ".json: " + e.what());
        }
        LoadedMrs loaded;
        loaded.transform = t;
        loaded.rel = canonical_relation(t, program.signature);
        std::size_t index = 0;
        for (const auto& entry : doc.at("mrs")) {
            MetamorphicRelation mr;
            mr.input_relation = loaded.rel;
            mr.output_relation = parse_prefix(
                entry.at("prefix").get<std::string>(), program.signature);
            loaded.mrs.push_back(std::move(mr));
            Fitness fit;
            fit.fp = entry.at("fitness").at("fp").get<long>();
            fit.fn = entry.at("fitness").at("fn").get<long>();
            fit.size = entry.at("fitness").at("size").get<std::size_t>();
            loaded.fits.push_back(std::move(fit));
            loaded.ids.push_back(slug + "#" + std::to_string(index++));
        }
        out.push_back(std::move(loaded));
    }
    return out;
}

inline std::string witness_text(const Signature& sig, const InputCase& c) {
    std::string out;
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        if (i) out += ",";
        out += sig.params[i].first + "=" + render_value(c.values[i]);
    }
    return out;
}

} // namespace detail

/// Step 6a: the two-step validity filter over every generated relation.
inline void stage_filter(const PipelineConfig& config) {
    SubjectProgram program = detail::load_subject(config, "filter");
    Corpus filter_corpus = detail::load_corpus(config, "filter_corpus.tsv",
                                               CorpusPurpose::Filter, "filter");
    FilterOptions opts = detail::effective_filter_options(config);

    std::string verdicts;
    for (const auto& loaded : detail::load_mrs(program, config, "filter")) {
        for (std::size_t i = 0; i < loaded.mrs.size(); ++i) {
            FilterVerdict verdict = two_step_filter(
                loaded.mrs[i], program, filter_corpus,
                derive_seed(config.seed, "filter." + loaded.ids[i]), opts);
            auto step_text = [&](const FilterStep& s) -> std::string {
                switch (s.outcome) {
                case FilterStep::Outcome::Pass: return "pass";
                case FilterStep::Outcome::Fail:
                    return "fail(" +
                           detail::witness_text(program.signature, s.witness) +
                           ")";
                case FilterStep::Outcome::Skipped: return "skipped";
                }
                return "?";
            };
            verdicts += loaded.ids[i] + "\t" + step_text(verdict.step1) + "\t" +
                        step_text(verdict.step2) + "\t" +
                        (verdict.valid ? "valid" : "invalid") + "\n";
        }
    }
    detail::write_text_file(detail::out_path(config, "verdicts.tsv"), verdicts);
}

namespace detail {

inline std::map<std::string, std::pair<std::string, std::string>> load_verdicts(
    const PipelineConfig& config, const char* stage) {
    std::map<std::string, std::pair<std::string, std::string>> out;
    std::istringstream in(read_text_file(out_path(config, "verdicts.tsv"), stage));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            cols.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (cols.size() != 4)
            throw StageError(stage, "malformed verdicts.tsv line: " + line);
        out[cols[0]] = {cols[1], cols[2]};
    }
    return out;
}

inline FilterStep::Outcome parse_step(const std::string& text) {
    if (text == "pass") return FilterStep::Outcome::Pass;
    if (text == "skipped") return FilterStep::Outcome::Skipped;
    return FilterStep::Outcome::Fail;
}

} // namespace detail

/// Step 6b: mutation scoring of the surviving relations on the held-out
/// mutants, the PZ/PZO ratios, and the baseline comparison.
inline RunReport stage_evaluate(const PipelineConfig& config) {
    SubjectProgram program = detail::load_subject(config, "evaluate");
    Corpus eval_corpus = detail::load_corpus(config, "eval_corpus.tsv",
                                             CorpusPurpose::Eval, "evaluate");
    MutantSet set = detail::load_split(program, config, "evaluate");
    if (set.eval.empty())
        throw StageError("evaluate", "no evaluation mutants (split degenerated)");
    auto verdict_map = detail::load_verdicts(config, "evaluate");
    FilterOptions opts = detail::effective_filter_options(config);

    RunReport report;
    report.subject = program.name;
    report.seed = config.seed;
    // the output location is not part of the run's identity
    nlohmann::json hashed = config_to_json(config);
    hashed.erase("out");
    report.config_hash = detail::fnv_hash_hex(hashed.dump());
    report.subject_hash = detail::fnv_hash_hex(program.source_text);
    report.eval_mutant_count = set.eval.size();

    std::vector<MetamorphicRelation> valid_mrs;
    std::vector<std::pair<std::size_t, std::size_t>> valid_slots;
    std::size_t generated = 0, step1_pass = 0, step2_pass = 0;

    for (auto& loaded : detail::load_mrs(program, config, "evaluate")) {
        TransformReport tr;
        tr.transform = loaded.transform;
        tr.rendering = loaded.rel.rendering;
        for (std::size_t i = 0; i < loaded.mrs.size(); ++i) {
            auto found = verdict_map.find(loaded.ids[i]);
            if (found == verdict_map.end())
                throw StageError("evaluate",
                                 "verdicts.tsv is missing " + loaded.ids[i] +
                                     " — rerun filter");
            MrReport mr_report;
            mr_report.id = loaded.ids[i];
            mr_report.mr = loaded.mrs[i];
            mr_report.fit = loaded.fits[i];
            mr_report.verdict.step1.outcome =
                detail::parse_step(found->second.first);
            mr_report.verdict.step2.outcome =
                detail::parse_step(found->second.second);
            mr_report.verdict.valid =
                mr_report.verdict.step1.outcome == FilterStep::Outcome::Pass &&
                mr_report.verdict.step2.outcome == FilterStep::Outcome::Pass;
            ++generated;
            if (mr_report.verdict.step1.outcome == FilterStep::Outcome::Pass)
                ++step1_pass;
            if (mr_report.verdict.valid) {
                ++step2_pass;
                valid_slots.emplace_back(report.transforms.size(),
                                         tr.mrs.size());
                valid_mrs.push_back(loaded.mrs[i]);
            }
            tr.mrs.push_back(std::move(mr_report));
        }
        report.transforms.push_back(std::move(tr));
    }

    Bitset baseline = baseline_kills(program, set.eval, eval_corpus,
                                     opts.step_budget);
    report.baseline_ms = static_cast<double>(baseline.count()) /
                         static_cast<double>(set.eval.size());

    if (!valid_mrs.empty()) {
        MutationScoreResult scored =
            mutation_score(valid_mrs, program, set.eval, eval_corpus, opts);
        report.ms = scored.ms;
        report.trivial_kills = scored.trivially_killed;
        report.delta = delta_ms(baseline, scored.killed);
        for (std::size_t v = 0; v < valid_slots.size(); ++v) {
            MrReport& slot =
                report.transforms[valid_slots[v].first].mrs[valid_slots[v].second];
            slot.eval_ms = scored.per_mr_ms[v];
            for (std::size_t k = 0; k < set.eval.size(); ++k)
                if (scored.per_mr_kills[v].test(k))
                    slot.killed_ids.push_back(set.eval[k].id);
        }
    } else {
        report.ms = 0.0;
        report.delta = delta_ms(baseline, Bitset(set.eval.size()));
    }
    report.pz = generated == 0 ? 0.0
                               : static_cast<double>(step2_pass) /
                                     static_cast<double>(generated);
    if (step1_pass > 0)
        report.pzo = static_cast<double>(step2_pass) /
                     static_cast<double>(step1_pass);

    return report;
}

// ---------------------------------------------------------------------------
// Report rendering

inline nlohmann::json report_to_json(const RunReport& report) {
    nlohmann::json transforms = nlohmann::json::array();
    for (const TransformReport& tr : report.transforms) {
        nlohmann::json mrs = nlohmann::json::array();
        for (const MrReport& mr : tr.mrs) {
            auto step_name = [](FilterStep::Outcome o) {
                switch (o) {
                case FilterStep::Outcome::Pass: return "pass";
                case FilterStep::Outcome::Fail: return "fail";
                case FilterStep::Outcome::Skipped: return "skipped";
                }
                return "?";
            };
            mrs.push_back(
                {{"id", mr.id},
                 {"prefix", render_prefix(mr.mr.output_relation)},
                 {"infix", render_infix(mr.mr.output_relation)},
                 {"fitness",
                  {{"fp", mr.fit.fp}, {"fn", mr.fit.fn}, {"size", mr.fit.size}}},
                 {"step1", step_name(mr.verdict.step1.outcome)},
                 {"step2", step_name(mr.verdict.step2.outcome)},
                 {"valid", mr.verdict.valid},
                 {"evalMs", mr.eval_ms},
                 {"kills", mr.killed_ids}});
        }
        transforms.push_back({{"transform", transform_descriptor(tr.transform)},
                              {"inputRelation", tr.rendering},
                              {"mrs", mrs}});
    }
    nlohmann::json eval = {{"ms", report.ms},
                           {"pz", report.pz},
                           {"baselineMs", report.baseline_ms},
                           {"trivialKills", report.trivial_kills},
                           {"evalMutants", report.eval_mutant_count}};
    eval["pzo"] = report.pzo ? nlohmann::json(*report.pzo) : nlohmann::json();
    eval["deltaMs"] =
        report.delta ? nlohmann::json(*report.delta) : nlohmann::json();
    return {{"provenance",
             {{"subject", report.subject},
              {"seed", report.seed},
              {"configHash", report.config_hash},
              {"subjectHash", report.subject_hash}}},
            {"transforms", transforms},
            {"eval", eval}};
}

inline std::string render_report_table(const RunReport& report) {
    std::ostringstream out;
    auto ratio = [](std::optional<double> v) {
        if (!v) return std::string("-");
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.2f", *v);
        return std::string(buf);
    };
    out << "subject " << report.subject << " (seed " << report.seed << ", "
        << report.eval_mutant_count << " eval mutants)\n\n";
    for (const TransformReport& tr : report.transforms) {
        out << transform_descriptor(tr.transform) << "\n";
        out << "  R_i: " << tr.rendering << "\n";
        for (const MrReport& mr : tr.mrs) {
            out << "  " << mr.id << "  fp=" << mr.fit.fp << " fn=" << mr.fit.fn
                << " size=" << mr.fit.size << "  "
                << (mr.verdict.valid ? "valid  " : "invalid")
                << "  MS=" << ratio(mr.verdict.valid
                                        ? std::optional<double>(mr.eval_ms)
                                        : std::nullopt)
                << "  " << render_infix(mr.mr.output_relation) << "\n";
        }
    }
    out << "\n";
    out << "MS    PZ    PZO   dMS   baseline\n";
    out << ratio(report.ms) << "  " << ratio(report.pz) << "  "
        << ratio(report.pzo) << "  " << ratio(report.delta) << "  "
        << ratio(report.baseline_ms) << "\n";
    return out.str();
}

inline RunReport write_report(const PipelineConfig& config) {
    RunReport report = stage_evaluate(config);
    detail::write_text_file(detail::out_path(config, "report.json"),
                            report_to_json(report).dump(2) + "\n");
    detail::write_text_file(detail::out_path(config, "report.txt"),
                            render_report_table(report));
    return report;
}

/// The whole pipeline, literally the six stages in order. Stage timings go
/// to timing.log (skipped under --deterministic so reports stay
/// byte-reproducible).
inline RunReport run_pipeline(const PipelineConfig& config) {
    std::string timing;
    auto timed = [&](const char* name, auto&& fn) {
        auto start = std::chrono::steady_clock::now();
        fn();
        std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - start;
        timing += std::string(name) + "\t" + std::to_string(elapsed.count()) +
                  "s\n";
    };
    RunReport report;
    timed("gen-inputs", [&] { stage_gen_inputs(config); });
    timed("gen-mutants", [&] { stage_gen_mutants(config); });
    timed("collect", [&] { stage_collect(config); });
    timed("evolve", [&] { stage_evolve(config); });
    timed("filter", [&] { stage_filter(config); });
    timed("evaluate", [&] { report = write_report(config); });
    if (!config.deterministic)
        detail::write_text_file(detail::out_path(config, "timing.log"), timing);
    return report;
}

} // namespace mrgen
