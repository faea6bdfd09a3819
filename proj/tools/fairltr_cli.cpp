// Pipeline driver: prepare -> logpolicy -> simulate -> noise-cal ->
// train/sweep -> eval, plus an estimator audit. Every artifact gets a
// manifest JSON (command, config hash, input hashes, seed) so runs can be
// reproduced exactly from one root seed.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairltr/clicksim.hpp"
#include "fairltr/dataset.hpp"
#include "fairltr/estimators.hpp"
#include "fairltr/eval.hpp"
#include "fairltr/exam_model.hpp"
#include "fairltr/policy.hpp"
#include "fairltr/rng.hpp"
#include "fairltr/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fairltr;

namespace {

struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw MissingInput("missing input: " + path);
}

void require_dataset(const std::string& dir) {
    require_file(dir);
    require_file((fs::path(dir) / "meta.json").string());
}

std::uint64_t hash_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i) {
            h ^= static_cast<std::uint8_t>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

// One manifest next to the subcommand's primary artifact.
void write_manifest(const std::string& artifact, const std::string& command,
                    const json& config, const std::vector<std::string>& inputs) {
    json in = json::object();
    for (const auto& p : inputs) {
        if (fs::is_directory(p)) {
            json files = json::object();
            for (const auto& e : fs::directory_iterator(p))
                if (e.is_regular_file())
                    files[e.path().filename().string()] =
                        hash_file(e.path().string());
            in[p] = files;
        } else {
            in[p] = hash_file(p);
        }
    }
    json m{{"command", command},
           {"config", config},
           {"config_hash", hash_name(config.dump())},
           {"inputs", in},
           {"format_version", 1}};
    std::ofstream os(artifact + ".manifest.json");
    os << m.dump(2) << "\n";
}

// JSON config files: top-level keys configure the app, nested objects scope
// options to subcommands, e.g. {"train": {"lambda": 1.0}}.
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }
    std::vector<CLI::ConfigItem> from_config(std::istream& is) const override {
        json j;
        try {
            j = json::parse(is);
        } catch (const json::exception& e) {
            throw CLI::ConfigError(e.what());
        }
        std::vector<CLI::ConfigItem> out;
        walk(j, {}, out);
        return out;
    }

  private:
    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }
    static void walk(const json& j, std::vector<std::string> parents,
                     std::vector<CLI::ConfigItem>& out) {
        if (!j.is_object()) throw CLI::ConfigError("config must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                auto p = parents;
                p.push_back(key);
                walk(value, std::move(p), out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array())
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            else
                item.inputs.push_back(scalar(value));
            out.push_back(std::move(item));
        }
    }
};

const std::vector<Query>& pick_split(const DatasetSplit& data,
                                     const std::string& name) {
    if (name == "train") return data.train;
    if (name == "validation") return data.validation;
    return data.test;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fair-exposure learning-to-rank pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "JSON config file");
    app.config_formatter(std::make_shared<JsonConfig>());
    app.fallthrough();

    std::function<void()> run;

    // ---- prepare ----------------------------------------------------------
    auto* prepare = app.add_subcommand(
        "prepare", "Build a train/validation/test dataset (synthetic or LETOR)");
    struct {
        std::string out;
        std::uint64_t seed = 0;
        bool synth = false;
        bool standardize = false;
        // synthetic generator
        int queries = 500, items = 20, features = 10, groups = 2;
        std::vector<double> rel_prob{0.7, 0.69};
        std::vector<double> group_prop;
        int signal_dims = 4;
        double signal_scale = 1.0, signal_noise = 2.0;
        // LETOR ingestion
        std::string letor;
        int group_feature = 0;  // 1-based feature id
        std::vector<double> percentiles{50.0};
        int candidates = 20, relevant = 2, query_count = 500;
    } prep;
    prepare->add_option("--out", prep.out, "Output dataset directory")->required();
    prepare->add_option("--seed", prep.seed, "Root seed");
    prepare->add_flag("--synth", prep.synth, "Generate synthetic data");
    prepare->add_flag("--standardize", prep.standardize,
                      "z-score features with train statistics");
    prepare->add_option("--queries", prep.queries, "Queries per split (synthetic)");
    prepare->add_option("--items", prep.items, "Items per query");
    prepare->add_option("--features", prep.features, "Feature count (synthetic)");
    prepare->add_option("--groups", prep.groups, "Group count (synthetic)");
    prepare->add_option("--rel-prob", prep.rel_prob, "Per-group relevance rates")
        ->delimiter(',');
    prepare->add_option("--group-prop", prep.group_prop, "Per-group proportions")
        ->delimiter(',');
    prepare->add_option("--signal-dims", prep.signal_dims,
                        "Relevance-correlated feature count");
    prepare->add_option("--signal-scale", prep.signal_scale, "Signal strength");
    prepare->add_option("--signal-noise", prep.signal_noise, "Signal noise sd");
    prepare->add_option("--letor", prep.letor, "LETOR/SVMlight input file");
    prepare->add_option("--group-feature", prep.group_feature,
                        "1-based feature id of the group attribute (LETOR)");
    prepare->add_option("--percentiles", prep.percentiles,
                        "Percentile thresholds for group assignment")
        ->delimiter(',');
    prepare->add_option("--candidates", prep.candidates, "Items per built query");
    prepare->add_option("--relevant", prep.relevant, "Relevant items per query");
    prepare->add_option("--query-count", prep.query_count, "Queries per split");
    prepare->callback([&] {
        run = [&] {
            DatasetSplit split;
            std::vector<std::string> inputs;
            if (prep.synth) {
                dataset::SynthConfig cfg;
                cfg.queries_per_split = prep.queries;
                cfg.items_per_query = prep.items;
                cfg.feature_count = prep.features;
                cfg.group_count = prep.groups;
                cfg.relevance_prob = prep.rel_prob;
                cfg.group_proportion = prep.group_prop;
                cfg.signal_dims = prep.signal_dims;
                cfg.signal_scale = prep.signal_scale;
                cfg.signal_noise_sd = prep.signal_noise;
                cfg.seed = prep.seed;
                split = dataset::synth_generate(cfg);
            } else {
                if (prep.letor.empty())
                    throw std::domain_error("need --synth or --letor <file>");
                require_file(prep.letor);
                inputs.push_back(prep.letor);
                std::ifstream is(prep.letor);
                auto pool = dataset::parse_letor(is);
                if (pool.empty()) throw std::domain_error("empty LETOR input");

                split.feature_count = static_cast<int>(pool.front().features.size());
                const char* names[3] = {"train", "validation", "test"};
                std::vector<Query>* dests[3] = {&split.train, &split.validation,
                                                &split.test};
                for (int s = 0; s < 3; ++s)
                    *dests[s] = dataset::construct_queries(
                        pool, prep.candidates, prep.relevant, prep.query_count,
                        derive_seed(prep.seed, names[s]));

                if (prep.group_feature >= 1) {
                    std::vector<double> values;
                    for (const auto& rec : pool)
                        values.push_back(rec.features[prep.group_feature - 1]);
                    auto thresholds = dataset::percentile_thresholds(
                        std::move(values), prep.percentiles);
                    for (auto* qs : dests)
                        dataset::assign_groups(*qs, prep.group_feature - 1,
                                               thresholds);
                    split.group_count = static_cast<int>(thresholds.size()) + 1;
                    split.group_feature = prep.group_feature - 1;
                } else {
                    split.group_count = 1;
                }
            }
            if (prep.standardize) dataset::standardize(split);
            dataset::save_split(split, prep.out);
            json cfg{{"seed", prep.seed},
                     {"synth", prep.synth},
                     {"standardize", prep.standardize},
                     {"queries", prep.queries},
                     {"items", prep.items},
                     {"rel_prob", prep.rel_prob}};
            write_manifest((fs::path(prep.out) / "dataset").string(), "prepare",
                           cfg, inputs);
            std::cout << "dataset written to " << prep.out << " ("
                      << split.train.size() << "/" << split.validation.size()
                      << "/" << split.test.size() << " queries)\n";
        };
    });

    // ---- logpolicy --------------------------------------------------------
    auto* logpolicy =
        app.add_subcommand("logpolicy", "Fit the weak logging policy");
    struct {
        std::string data, out;
        double fraction = 0.1;
        std::uint64_t seed = 0;
    } logp;
    logpolicy->add_option("--data", logp.data, "Dataset directory")->required();
    logpolicy->add_option("--out", logp.out, "Output model file")->required();
    logpolicy->add_option("--log-fraction", logp.fraction,
                          "Fraction of train queries used for the fit");
    logpolicy->add_option("--seed", logp.seed, "Root seed");
    logpolicy->callback([&] {
        run = [&] {
            require_dataset(logp.data);
            auto split = dataset::load_split(logp.data);
            auto policy =
                clicksim::train_logging_policy(split.train, logp.fraction, logp.seed);
            policy.save(logp.out, logp.seed);
            json cfg{{"log_fraction", logp.fraction}, {"seed", logp.seed}};
            write_manifest(logp.out, "logpolicy", cfg, {logp.data});
            std::cout << "logging policy written to " << logp.out << "\n";
        };
    });

    // ---- simulate ---------------------------------------------------------
    auto* simulate =
        app.add_subcommand("simulate", "Generate a click log from a policy");
    struct {
        std::string data, policy, out, split = "train";
        double eta = 1.0, eps_plus = 1.0, eps_minus = 0.0;
        int impressions = 1;
        std::uint64_t seed = 0;
        double record_eta = 0.0;
    } sim;
    simulate->add_option("--data", sim.data, "Dataset directory")->required();
    simulate->add_option("--policy", sim.policy, "Logging policy model file")
        ->required();
    simulate->add_option("--out", sim.out, "Output click log (JSONL)")->required();
    simulate->add_option("--split", sim.split, "Split to simulate on")
        ->check(CLI::IsMember({"train", "validation", "test"}));
    simulate->add_option("--eta", sim.eta, "Position-bias severity");
    simulate->add_option("--eps-plus", sim.eps_plus, "P(click | relevant, examined)");
    simulate->add_option("--eps-minus", sim.eps_minus,
                         "P(click | irrelevant, examined)");
    simulate->add_option("--impressions", sim.impressions, "Impressions per query");
    simulate->add_option("--seed", sim.seed, "Root seed");
    auto* rec_eta_opt = simulate->add_option(
        "--record-eta", sim.record_eta,
        "Record propensities with this (misspecified) eta instead of --eta");
    simulate->callback([&] {
        run = [&] {
            require_dataset(sim.data);
            require_file(sim.policy);
            auto split = dataset::load_split(sim.data);
            auto policy = Scorer::load(sim.policy);
            ExaminationModel exam{sim.eta, sim.eps_plus, sim.eps_minus};
            std::optional<double> rec_eta;
            if (rec_eta_opt->count() > 0) rec_eta = sim.record_eta;
            auto records =
                clicksim::simulate_clicks(pick_split(split, sim.split), policy,
                                          exam, sim.impressions, sim.seed, rec_eta);
            clicksim::save_click_log(records, sim.out);
            long long clicks = 0;
            for (const auto& r : records)
                for (auto c : r.clicks) clicks += c;
            json cfg{{"split", sim.split},       {"eta", sim.eta},
                     {"eps_plus", sim.eps_plus}, {"eps_minus", sim.eps_minus},
                     {"impressions", sim.impressions}, {"seed", sim.seed}};
            write_manifest(sim.out, "simulate", cfg, {sim.data, sim.policy});
            std::cout << "wrote " << records.size() << " impressions, " << clicks
                      << " clicks to " << sim.out << "\n";
        };
    });

    // ---- noise-cal --------------------------------------------------------
    auto* noisecal = app.add_subcommand(
        "noise-cal", "Estimate the click-noise floor via a planted item");
    struct {
        std::string data, policy;
        double eta = 1.0, eps_plus = 1.0, eps_minus = 0.0;
        int planted_k = 2, impressions = 1000;
        double fraction = 0.1;
        std::uint64_t seed = 0;
        std::string out;
    } cal;
    noisecal->add_option("--data", cal.data, "Dataset directory")->required();
    noisecal->add_option("--policy", cal.policy, "Logging policy model file")
        ->required();
    noisecal->add_option("--eta", cal.eta, "Position-bias severity");
    noisecal->add_option("--eps-plus", cal.eps_plus, "True positive click rate");
    noisecal->add_option("--eps-minus", cal.eps_minus, "True noise floor");
    noisecal->add_option("--planted-k", cal.planted_k, "Planted position (1-based)");
    noisecal->add_option("--intervention-fraction", cal.fraction,
                         "Fraction of impressions receiving the intervention");
    noisecal->add_option("--impressions", cal.impressions, "Impressions per query");
    noisecal->add_option("--seed", cal.seed, "Root seed");
    noisecal->add_option("--out", cal.out, "Optional JSON output file");
    noisecal->callback([&] {
        run = [&] {
            require_dataset(cal.data);
            require_file(cal.policy);
            auto split = dataset::load_split(cal.data);
            auto policy = Scorer::load(cal.policy);
            ExaminationModel exam{cal.eta, cal.eps_plus, cal.eps_minus};
            double est = clicksim::estimate_eps_minus(
                split.train, policy, exam, cal.planted_k, cal.fraction,
                cal.impressions, cal.seed);
            std::cout << "eps_minus_hat " << est << "\n";
            if (!cal.out.empty()) {
                std::ofstream os(cal.out);
                os << json{{"eps_minus_hat", est}}.dump(2) << "\n";
                json cfg{{"planted_k", cal.planted_k},
                         {"intervention_fraction", cal.fraction},
                         {"impressions", cal.impressions},
                         {"seed", cal.seed}};
                write_manifest(cal.out, "noise-cal", cfg, {cal.data, cal.policy});
            }
        };
    });

    // ---- shared train/sweep options --------------------------------------
    struct TrainCli {
        std::string data, train_log, val_log;
        double lambda = 0.0;
        std::vector<double> lambda_grid{0.0, 0.1, 1.0, 10.0, 100.0, 1000.0};
        double delta = 0.0;
        int samples = 32;
        double lr = 0.001, l2 = 0.0, entropy_gamma = 1.0;
        int window = 100, epochs = 20, batch = 1;
        std::uint64_t seed = 0;
        std::string ablation = "full_ips";
        bool group_blind = false;
        double eps_minus = 0.0;
        bool full_info = false;
        std::string model = "linear";
        int hidden = 64;
        double eta = 1.0;
        std::string out, trace, out_dir;
    };
    auto add_train_options = [](CLI::App* cmd, TrainCli& t, bool sweep_mode) {
        cmd->add_option("--data", t.data, "Dataset directory")->required();
        cmd->add_option("--train-log", t.train_log,
                        "Training click log (unused with --full-info)");
        cmd->add_option("--val-log", t.val_log, "Validation click log");
        if (sweep_mode) {
            cmd->add_option("--lambda-grid", t.lambda_grid, "Lagrangian grid")
                ->delimiter(',');
            cmd->add_option("--delta", t.delta,
                            "Allowed validation squared disparity");
        } else {
            cmd->add_option("--lambda", t.lambda, "Fairness penalty weight");
        }
        cmd->add_option("--samples", t.samples, "Rankings sampled per step");
        cmd->add_option("--lr", t.lr, "Learning rate");
        cmd->add_option("--l2", t.l2, "L2 penalty");
        cmd->add_option("--entropy-gamma", t.entropy_gamma,
                        "Initial entropy regularizer weight");
        cmd->add_option("--window", t.window, "Running disparity window");
        cmd->add_option("--epochs", t.epochs, "Training epochs");
        cmd->add_option("--batch", t.batch, "Queries per parameter update");
        cmd->add_option("--seed", t.seed, "Root seed");
        cmd->add_option("--ablation", t.ablation, "Propensity ablation")
            ->check(CLI::IsMember({"full_ips", "no_ips", "utility_ips_only"}));
        cmd->add_flag("--group-blind", t.group_blind,
                      "Zero the group indicator feature");
        cmd->add_option("--eps-minus", t.eps_minus,
                        "Noise-floor correction for disparity estimates");
        cmd->add_flag("--full-info", t.full_info,
                      "Train on true relevance labels (skyline)");
        cmd->add_option("--model", t.model, "Scorer architecture")
            ->check(CLI::IsMember({"linear", "mlp"}));
        cmd->add_option("--hidden", t.hidden, "MLP hidden width");
        cmd->add_option("--eta", t.eta, "Position-bias severity for exposure");
    };
    auto make_config = [](const TrainCli& t, bool sweep_mode) {
        TrainConfig cfg;
        if (sweep_mode) cfg.lambda_grid = t.lambda_grid;
        cfg.delta = t.delta;
        cfg.mc_samples = t.samples;
        cfg.learning_rate = t.lr;
        cfg.l2_coeff = t.l2;
        cfg.entropy_gamma_init = t.entropy_gamma;
        cfg.running_window = t.window;
        cfg.epochs = t.epochs;
        cfg.batch_size = t.batch;
        cfg.seed = t.seed;
        cfg.ablation = t.ablation == "no_ips" ? Ablation::NoIps
                       : t.ablation == "utility_ips_only"
                           ? Ablation::UtilityIpsOnly
                           : Ablation::FullIps;
        cfg.group_blind = t.group_blind;
        if (t.eps_minus > 0.0) cfg.noise_eps_minus = t.eps_minus;
        cfg.full_info = t.full_info;
        cfg.model = t.model == "mlp" ? Scorer::Kind::OneHidden
                                     : Scorer::Kind::Linear;
        cfg.hidden_width = t.hidden;
        return cfg;
    };
    auto load_logs = [](const TrainCli& t) {
        std::vector<ClickRecord> train_logs, val_logs;
        if (!t.full_info) {
            if (t.train_log.empty())
                throw std::domain_error("need --train-log (or --full-info)");
            require_file(t.train_log);
            train_logs = clicksim::load_click_log(t.train_log);
            if (!t.val_log.empty()) {
                require_file(t.val_log);
                val_logs = clicksim::load_click_log(t.val_log);
            }
        }
        return std::pair{std::move(train_logs), std::move(val_logs)};
    };
    auto cli_json = [](const TrainCli& t, bool sweep_mode) {
        json j{{"samples", t.samples},   {"lr", t.lr},
               {"l2", t.l2},             {"entropy_gamma", t.entropy_gamma},
               {"window", t.window},     {"epochs", t.epochs},
               {"batch", t.batch},       {"seed", t.seed},
               {"ablation", t.ablation}, {"group_blind", t.group_blind},
               {"eps_minus", t.eps_minus}, {"full_info", t.full_info},
               {"model", t.model},       {"eta", t.eta}};
        if (sweep_mode) {
            j["lambda_grid"] = t.lambda_grid;
            j["delta"] = t.delta;
        } else {
            j["lambda"] = t.lambda;
        }
        return j;
    };

    // ---- train ------------------------------------------------------------
    auto* train = app.add_subcommand("train", "Train one policy at a fixed lambda");
    static TrainCli tr;
    add_train_options(train, tr, false);
    train->add_option("--out", tr.out, "Output model file")->required();
    train->add_option("--trace", tr.trace, "Per-epoch metrics CSV");
    train->callback([&] {
        run = [&] {
            require_dataset(tr.data);
            auto split = dataset::load_split(tr.data);
            auto [train_logs, val_logs] = load_logs(tr);
            ExaminationModel exam{tr.eta, 1.0, 0.0};
            Trainer trainer(split, std::move(train_logs), std::move(val_logs),
                            make_config(tr, false), exam);
            auto result = trainer.train_one_lambda(tr.lambda);
            result.policy.save(tr.out, tr.seed);
            if (!tr.trace.empty()) save_trace_csv(result.trace, tr.trace);
            std::vector<std::string> inputs{tr.data};
            if (!tr.train_log.empty()) inputs.push_back(tr.train_log);
            if (!tr.val_log.empty()) inputs.push_back(tr.val_log);
            write_manifest(tr.out, "train", cli_json(tr, false), inputs);
            std::cout << "model written to " << tr.out
                      << " (best val objective " << result.best_val_objective
                      << ")\n";
        };
    });

    // ---- sweep ------------------------------------------------------------
    auto* sweep =
        app.add_subcommand("sweep", "Grid-search lambda and pick a policy");
    static TrainCli sw;
    add_train_options(sweep, sw, true);
    sweep->add_option("--out-dir", sw.out_dir, "Output directory")->required();
    sweep->callback([&] {
        run = [&] {
            require_dataset(sw.data);
            auto split = dataset::load_split(sw.data);
            auto [train_logs, val_logs] = load_logs(sw);
            ExaminationModel exam{sw.eta, 1.0, 0.0};
            Trainer trainer(split, std::move(train_logs), std::move(val_logs),
                            make_config(sw, true), exam);
            auto result = trainer.sweep();
            fs::create_directories(sw.out_dir);
            save_sweep_json(result, (fs::path(sw.out_dir) / "sweep.json").string());
            auto rows = eval::frontier(result, split.test, exam);
            eval::save_frontier_csv(rows,
                                    (fs::path(sw.out_dir) / "frontier.csv").string());
            if (result.selected >= 0)
                result.entries[result.selected].policy.save(
                    (fs::path(sw.out_dir) / "selected.bin").string(), sw.seed);
            std::vector<std::string> inputs{sw.data};
            if (!sw.train_log.empty()) inputs.push_back(sw.train_log);
            if (!sw.val_log.empty()) inputs.push_back(sw.val_log);
            write_manifest((fs::path(sw.out_dir) / "sweep.json").string(), "sweep",
                           cli_json(sw, true), inputs);
            std::cout << "sweep finished; selected lambda "
                      << (result.selected >= 0
                              ? result.entries[result.selected].lambda
                              : -1.0)
                      << (result.constraint_satisfied
                              ? ""
                              : " (constraint not satisfied, min-disparity fallback)")
                      << "\n";
        };
    });

    // ---- eval -------------------------------------------------------------
    auto* evalc = app.add_subcommand("eval", "Full-information policy evaluation");
    struct {
        std::string data, model_file, out, split = "test", mode = "argmax";
        int samples = 32;
        double eta = 1.0;
        std::uint64_t seed = 0;
    } ev;
    evalc->add_option("--data", ev.data, "Dataset directory")->required();
    evalc->add_option("--model-file", ev.model_file, "Policy model file")
        ->required();
    evalc->add_option("--out", ev.out, "Output report JSON")->required();
    evalc->add_option("--split", ev.split, "Split to evaluate")
        ->check(CLI::IsMember({"train", "validation", "test"}));
    evalc->add_option("--mode", ev.mode, "Ranking mode")
        ->check(CLI::IsMember({"argmax", "stochastic"}));
    evalc->add_option("--samples", ev.samples, "Samples in stochastic mode");
    evalc->add_option("--eta", ev.eta, "Position-bias severity for exposure");
    evalc->add_option("--seed", ev.seed, "Root seed");
    evalc->callback([&] {
        run = [&] {
            require_dataset(ev.data);
            require_file(ev.model_file);
            auto split = dataset::load_split(ev.data);
            auto policy = Scorer::load(ev.model_file);
            ExaminationModel exam{ev.eta, 1.0, 0.0};
            auto report = eval::evaluate(
                policy, pick_split(split, ev.split), exam,
                ev.mode == "argmax" ? eval::Mode::Argmax : eval::Mode::Stochastic,
                ev.samples, ev.seed);
            eval::save_report_json(report, ev.out);
            json cfg{{"split", ev.split},     {"mode", ev.mode},
                     {"samples", ev.samples}, {"eta", ev.eta},
                     {"seed", ev.seed}};
            write_manifest(ev.out, "eval", cfg, {ev.data, ev.model_file});
            std::cout << "avg_dcg " << report.avg_dcg << " total_disparity_sq "
                      << report.total_disparity_sq << "\n";
        };
    });

    // ---- audit ------------------------------------------------------------
    auto* audit = app.add_subcommand(
        "audit", "Per-record disparity estimates vs. true values (CSV)");
    struct {
        std::string data, log, out, split = "train";
        double eta = 1.0, eps_minus = 0.0;
    } au;
    audit->add_option("--data", au.data, "Dataset directory")->required();
    audit->add_option("--log", au.log, "Click log to audit")->required();
    audit->add_option("--out", au.out, "Output CSV")->required();
    audit->add_option("--split", au.split, "Split the log was generated from")
        ->check(CLI::IsMember({"train", "validation", "test"}));
    audit->add_option("--eta", au.eta, "Position-bias severity");
    audit->add_option("--eps-minus", au.eps_minus,
                      "Noise floor for the corrected estimator");
    audit->callback([&] {
        run = [&] {
            require_dataset(au.data);
            require_file(au.log);
            auto split = dataset::load_split(au.data);
            const auto& queries = pick_split(split, au.split);
            std::map<std::string, int> by_qid;
            for (std::size_t i = 0; i < queries.size(); ++i)
                by_qid[queries[i].id] = static_cast<int>(i);
            auto records = clicksim::load_click_log(au.log);
            ExaminationModel exam{au.eta, 1.0, au.eps_minus};

            const int G = split.group_count;
            std::ofstream os(au.out);
            if (!os) throw std::runtime_error("cannot write " + au.out);
            os << "qid,pair,kind,value\n";
            struct Agg {
                double true_sum = 0, ips_sum = 0, corr_sum = 0;
                double expo_i = 0, expo_j = 0, merit_i = 0, merit_j = 0;
            };
            std::map<std::pair<int, int>, Agg> agg;
            for (const auto& rec : records) {
                auto it = by_qid.find(rec.qid);
                if (it == by_qid.end())
                    throw std::runtime_error("log references unknown query " +
                                             rec.qid);
                const Query& q = queries[it->second];
                std::vector<int> groups(q.size());
                for (int d = 0; d < q.size(); ++d) groups[d] = q.items[d].group;
                for (int i = 0; i < G; ++i)
                    for (int j = i + 1; j < G; ++j) {
                        double ei = est::group_exposure(rec.logged_ranking, groups,
                                                        i, exam);
                        double ej = est::group_exposure(rec.logged_ranking, groups,
                                                        j, exam);
                        auto tru = est::disparity_true(q, i, j, ei, ej);
                        auto ips = est::disparity_ips(rec, groups, i, j, ei, ej);
                        std::string pair =
                            std::to_string(i) + "-" + std::to_string(j);
                        os << rec.qid << ',' << pair << ",TRUE," << tru.value
                           << "\n";
                        os << rec.qid << ',' << pair << ",IPS," << ips.value
                           << "\n";
                        auto& a = agg[{i, j}];
                        a.true_sum += tru.value;
                        a.ips_sum += ips.value;
                        a.expo_i += ei;
                        a.expo_j += ej;
                        a.merit_i += est::merit_ips(rec, groups, i);
                        a.merit_j += est::merit_ips(rec, groups, j);
                        if (au.eps_minus > 0.0) {
                            auto corr = est::disparity_noise_corrected(
                                rec, groups, i, j, ei, ej, au.eps_minus);
                            os << rec.qid << ',' << pair << ",NOISE_CORRECTED,"
                               << corr.value << "\n";
                            a.corr_sum += corr.value;
                        }
                    }
            }
            const double n = static_cast<double>(records.size());
            for (const auto& [pair, a] : agg) {
                std::string name = std::to_string(pair.first) + "-" +
                                   std::to_string(pair.second);
                os << "ALL," << name << ",TRUE_MEAN," << a.true_sum / n << "\n";
                os << "ALL," << name << ",IPS_MEAN," << a.ips_sum / n << "\n";
                if (au.eps_minus > 0.0)
                    os << "ALL," << name << ",NOISE_CORRECTED_MEAN,"
                       << a.corr_sum / n << "\n";
                if (a.merit_i > 0.0 && a.merit_j > 0.0)
                    os << "ALL," << name << ",AMORTIZED,"
                       << a.expo_i / a.merit_i - a.expo_j / a.merit_j << "\n";
            }
            os.close();
            json cfg{{"split", au.split},
                     {"eta", au.eta},
                     {"eps_minus", au.eps_minus}};
            write_manifest(au.out, "audit", cfg, {au.data, au.log});
            std::cout << "audit written to " << au.out << "\n";
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        run();
        return 0;
    } catch (const MissingInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
