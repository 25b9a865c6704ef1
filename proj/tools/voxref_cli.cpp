#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <voxref/voxref.hpp>

namespace fs = std::filesystem;
using namespace voxref;

namespace {

void log(const std::string& msg) { std::cerr << "voxref: " << msg << '\n'; }

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot open '" + p.string() + "' for writing");
    return out;
}

void write_json(const fs::path& p, const Json& j) {
    auto out = open_out(p);
    out << j.dump(2) << '\n';
    log("wrote " + p.string());
}

Json store_stats(const EmbeddingStore& store) {
    std::map<std::string, std::size_t> pools;
    std::map<std::string, std::pair<std::size_t, std::size_t>> datasets;
    std::size_t bona = 0, spoof = 0;
    for (const auto& r : store.records()) {
        pools.try_emplace(r.identity_id, 0);
        if (r.label == Label::BonaFide) {
            ++bona;
            ++pools[r.identity_id];
            ++datasets[r.dataset_tag].first;
        } else {
            ++spoof;
            ++datasets[r.dataset_tag].second;
        }
    }
    Json pool_stats = nullptr;
    if (!pools.empty()) {
        std::size_t lo = SIZE_MAX, hi = 0, sum = 0;
        for (const auto& [id, n] : pools) {
            lo = std::min(lo, n);
            hi = std::max(hi, n);
            sum += n;
        }
        pool_stats = Json{{"min", lo}, {"mean", static_cast<double>(sum) / static_cast<double>(pools.size())}, {"max", hi}};
    }
    Json ds = Json::object();
    for (const auto& [name, c] : datasets) ds[name] = Json{{"bonafide", c.first}, {"spoof", c.second}};
    Json j = store_info(store);
    j["identities"] = pools.size();
    j["bonafide"] = bona;
    j["spoof"] = spoof;
    j["bonafide_pool_size"] = pool_stats;
    j["datasets"] = ds;
    return j;
}

Embedding read_external_embedding(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw Error("cannot open embedding file '" + p.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error("embedding file '" + p.string() + "': " + e.what());
    }
    if (j.is_object() && j.contains("embedding")) j = j["embedding"];
    if (!j.is_array()) throw Error("embedding file must hold a JSON array or an object with 'embedding'");
    std::vector<float> v;
    for (const auto& x : j) {
        if (!x.is_number()) throw Error("embedding file contains a non-numeric entry");
        v.push_back(static_cast<float>(x.get<double>()));
    }
    return Embedding(std::move(v));
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(tok, &pos);
            if (pos != tok.size() || v <= 0) throw std::invalid_argument(tok);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw Error("invalid reference size '" + tok + "'");
        }
    }
    return out;
}

/// Trials at the configured reference size (0 means each identity's full pool).
std::vector<TrialScore> trials_for(const EmbeddingStore& store, const RunConfig& cfg) {
    if (cfg.reference_size == 0) return score_all(store, cfg.threads);
    return score_with_reference_size(store, cfg.reference_size, cfg.seed, 0, cfg.threads);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Identity-based synthetic speech verification on pre-computed embeddings"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kEngineName) + " " + kEngineVersion);

    RunConfig cfg;
    if (const char* env = std::getenv("VOXREF_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    std::string store_path, sizes_arg = "1,2,5,10,25,100";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "Seed for every random draw")->capture_default_str();
        sub->add_option("--threads", cfg.threads, "Worker threads (0: all cores)")->capture_default_str();
    };
    auto add_store = [&](CLI::App* sub) {
        sub->add_option("--store", store_path, "Embedding store (binary or JSONL)")->required();
    };
    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out-dir", cfg.output_dir, "Report directory (env VOXREF_OUTPUT_DIR)")->capture_default_str();
    };
    auto add_cost = [&](CLI::App* sub) {
        sub->add_option("--c-miss", cfg.cost.c_miss, "Cost of a missed bona-fide trial")->capture_default_str();
        sub->add_option("--c-fa", cfg.cost.c_fa, "Cost of an accepted spoof")->capture_default_str();
        sub->add_option("--p-target", cfg.cost.p_target, "Prior of bona-fide trials")->capture_default_str();
        sub->add_option("--p-spoof", cfg.cost.p_spoof, "Prior of spoof trials")->capture_default_str();
    };

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a store, print statistics, convert formats");
    std::string in_path, to_binary, to_jsonl, model_name;
    ingest->add_option("input", in_path, "Input store (JSONL or binary)")->required();
    ingest->add_option("--to-binary", to_binary, "Write the store in binary format");
    ingest->add_option("--to-jsonl", to_jsonl, "Write the store in JSONL format");
    ingest->add_option("--model-name", model_name, "Override the store's model name");
    add_common(ingest);

    // verify
    auto* verify = app.add_subcommand("verify", "Decide whether one utterance matches a claimed identity");
    std::string utterance, embedding_file, claim;
    add_store(verify);
    auto* utt_opt = verify->add_option("--utterance", utterance, "Test utterance id inside the store");
    auto* emb_opt = verify->add_option("--embedding", embedding_file, "JSON file with the test embedding");
    utt_opt->excludes(emb_opt);
    verify->add_option("--claim", claim, "Claimed identity")->required();
    verify->add_option("--threshold", cfg.threshold, "Decision threshold")->capture_default_str();
    add_common(verify);

    auto* eval = app.add_subcommand("eval", "Score every utterance against its identity and report metrics");
    add_store(eval);
    add_out(eval);
    add_cost(eval);
    add_common(eval);

    auto* sweep_ref = app.add_subcommand("sweep-ref", "AUC as a function of reference-set size");
    add_store(sweep_ref);
    add_out(sweep_ref);
    sweep_ref->add_option("--sizes", sizes_arg, "Comma-separated, strictly increasing sizes")->capture_default_str();
    sweep_ref->add_option("--repetitions", cfg.repetitions, "Seeded draws per size")->capture_default_str();
    add_common(sweep_ref);

    auto* sweep_thr = app.add_subcommand("sweep-threshold", "Accuracy as a function of the decision threshold");
    bool full_range = false;
    add_store(sweep_thr);
    add_out(sweep_thr);
    sweep_thr->add_option("--reference-size", cfg.reference_size, "References per identity (0: full pool)")->capture_default_str();
    sweep_thr->add_option("--grid-lo", cfg.grid_lo, "Lowest threshold")->capture_default_str();
    sweep_thr->add_option("--grid-hi", cfg.grid_hi, "Highest threshold")->capture_default_str();
    sweep_thr->add_option("--grid-steps", cfg.grid_steps, "Number of grid intervals")->capture_default_str();
    sweep_thr->add_flag("--full-range", full_range, "Sweep [-1, 1] instead of [lo, hi]");
    sweep_thr->add_option("--threshold", cfg.threshold, "Fixed threshold to compare against the optimum")->capture_default_str();
    add_common(sweep_thr);

    auto* hist = app.add_subcommand("hist", "Per-class histograms of the decision statistic");
    add_store(hist);
    add_out(hist);
    hist->add_option("--bins", cfg.bins, "Uniform bins over [-1, 1]")->capture_default_str();
    hist->add_option("--reference-size", cfg.reference_size, "References per identity (0: full pool)")->capture_default_str();
    add_common(hist);

    auto* fixture = app.add_subcommand("fixture", "Generate the seeded synthetic store");
    FixtureConfig fx;
    std::string fixture_out, fixture_format = "binary";
    fixture->add_option("--out", fixture_out, "Output file")->required();
    fixture->add_option("--format", fixture_format, "binary | jsonl")->check(CLI::IsMember({"binary", "jsonl"}))->capture_default_str();
    fixture->add_option("--identities", fx.identities)->capture_default_str();
    fixture->add_option("--bonafide", fx.bonafide_per_identity, "Bona-fide utterances per identity")->capture_default_str();
    fixture->add_option("--spoof", fx.spoof_per_identity, "Spoof utterances per identity")->capture_default_str();
    fixture->add_option("--dim", fx.dim)->capture_default_str();
    fixture->add_option("--datasets", fx.datasets, "Spread identities over this many dataset tags")->capture_default_str();
    add_common(fixture);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!store_path.empty()) cfg.inputs.push_back(store_path);

        if (*ingest) {
            cfg.command = "ingest";
            EmbeddingStore store = load_store(in_path);
            if (!model_name.empty()) store.set_model_name(model_name);
            if (!to_binary.empty()) {
                write_binary(to_binary, store);
                if (!(ingest_binary(to_binary) == store)) throw Error("binary round-trip check failed");
                log("wrote " + to_binary);
            }
            if (!to_jsonl.empty()) {
                write_jsonl(fs::path(to_jsonl), store);
                log("wrote " + to_jsonl);
            }
            std::cout << store_stats(store).dump(2) << '\n';
            return 0;
        }

        if (*verify) {
            cfg.command = "verify";
            const EmbeddingStore store = load_store(store_path);
            const ReferenceSet ref = reference_set(store, claim);
            Verdict v;
            if (!utterance.empty()) {
                const TrialScore t = score_record(store.at(utterance), ref);
                v = decide({t.score, t.argmax_reference}, cfg.threshold);
            } else if (!embedding_file.empty()) {
                v = decide(max_similarity(read_external_embedding(embedding_file), ref), cfg.threshold);
            } else {
                throw Error("verify needs --utterance or --embedding");
            }
            Json j = to_json(v);
            j["claimed_identity"] = claim;
            j["reference_size"] = ref.size();
            std::cout << j.dump(2) << '\n';
            return 0;
        }

        if (*fixture) {
            cfg.command = "fixture";
            fx.seed = cfg.seed;
            const EmbeddingStore store = make_fixture(fx);
            if (fixture_format == "binary") write_binary(fixture_out, store);
            else write_jsonl(fs::path(fixture_out), store);
            log("wrote " + fixture_out + " (" + std::to_string(store.size()) + " records, dim " +
                std::to_string(store.dim()) + ")");
            return 0;
        }

        const EmbeddingStore store = load_store(store_path);
        const fs::path out_dir = cfg.output_dir;

        if (*eval) {
            cfg.command = "eval";
            cfg.cost.validate();
            const Evaluation ev = evaluate(store, cfg.cost, cfg.threads);
            const Json report = make_report(cfg, to_json(ev.summary), store_info(store));
            write_json(out_dir / "eval.json", report);
            auto trials = open_out(out_dir / "trials.jsonl");
            write_trials_jsonl(trials, ev.trials);
            std::cout << report.dump(2) << '\n';
        } else if (*sweep_ref) {
            cfg.command = "sweep-ref";
            cfg.sizes = parse_sizes(sizes_arg);
            const SweepResult res = reference_sweep(store, cfg.sizes, cfg.repetitions, cfg.seed, cfg.threads);
            const Json report = make_report(cfg, to_json(res), store_info(store));
            write_json(out_dir / "sweep_ref.json", report);
            auto csv = open_out(out_dir / "sweep_ref.csv");
            write_sweep_csv(csv, res);
            std::cout << report.dump(2) << '\n';
        } else if (*sweep_thr) {
            cfg.command = "sweep-threshold";
            if (full_range) {
                cfg.grid_lo = -1.0;
                cfg.grid_hi = 1.0;
            }
            if (cfg.grid_lo > cfg.grid_hi) throw Error("--grid-lo must not exceed --grid-hi");
            const auto trials = trials_for(store, cfg);
            const auto grid = uniform_grid(cfg.grid_lo, cfg.grid_hi, cfg.grid_steps);
            const ThresholdSweep res = threshold_sweep(trials, grid, cfg.threshold);
            const Json report = make_report(cfg, to_json(res), store_info(store));
            write_json(out_dir / "sweep_threshold.json", report);
            auto csv = open_out(out_dir / "sweep_threshold.csv");
            write_threshold_csv(csv, res);
            std::cout << report.dump(2) << '\n';
        } else if (*hist) {
            cfg.command = "hist";
            const auto trials = trials_for(store, cfg);
            const ScoreHistogram h = histogram(trials, cfg.bins, cfg.reference_size);
            const Json report = make_report(cfg, to_json(h), store_info(store));
            write_json(out_dir / "hist.json", report);
            auto csv = open_out(out_dir / "hist.csv");
            write_histogram_csv(csv, h);
            std::cout << report.dump(2) << '\n';
        }
    } catch (const std::exception& e) {
        log(std::string("error: ") + e.what());
        return 1;
    }
    return 0;
}
