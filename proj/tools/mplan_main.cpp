// mplan: dataset generation, VAE training, roadmap construction, dynamic
// obstacle-avoidance simulation and independent trace verification.
//
// Exit codes: 0 success, 2 config error, 3 input error, 4 planning failure
// (trapped/timeout), 5 verification mismatch.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mplan/errors.hpp"
#include "mplan/pipeline.hpp"
#include "mplan/textio.hpp"
#include "mplan/version.hpp"

namespace fs = std::filesystem;
using namespace mplan;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir_override;
    std::vector<std::string> overrides;  // key=value
};

RunConfig resolve_config(const CommonArgs& a) {
    std::string text;
    if (!a.config_path.empty()) {
        std::ifstream f(a.config_path);
        if (!f) throw ConfigError("cannot open config file: " + a.config_path);
        std::stringstream ss;
        ss << f.rdbuf();
        text = ss.str();
    } else {
        text = "mplan-config 1\n";
    }
    for (const auto& kv : a.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("override must look like key=value: " + kv);
        std::string v = kv.substr(eq + 1);
        for (auto& c : v)
            if (c == ',') c = ' ';
        text += kv.substr(0, eq) + " " + v + "\n";
    }
    RunConfig cfg = parse_config(text, a.config_path.empty() ? "<defaults>" : a.config_path);
    if (!a.out_dir_override.empty()) cfg.out_dir = a.out_dir_override;
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("-c,--config", a.config_path, "config file (key-value; see docs/formats.md)");
    cmd->add_option("-o,--out", a.out_dir_override, "output directory override");
    cmd->add_option("--set", a.overrides, "config override key=value (repeatable)")->take_all();
}

Scenario resolve_scenario(const std::string& ref) {
    if (fs::exists(ref)) return load_scenario(ref);
    return builtin_scenario(ref);
}

int run_generate_cmd(const CommonArgs& a) {
    const RunConfig cfg = resolve_config(a);
    const RobotModel robot = resolve_robot(cfg.robot_ref);
    fs::create_directories(cfg.out_dir);
    const auto paths = pipeline::Paths::in(cfg.out_dir);

    const Dataset d = pipeline::run_generate(cfg, robot);
    save_dataset(d, paths.dataset_csv, paths.dataset_meta);
    std::cout << "wrote " << paths.dataset_csv << " (" << d.size() << " samples, colliding fraction "
              << d.colliding_fraction() << ")\n";
    return 0;
}

int run_train_cmd(const CommonArgs& a, const std::string& dataset_csv) {
    const RunConfig cfg = resolve_config(a);
    const RobotModel robot = resolve_robot(cfg.robot_ref);
    fs::create_directories(cfg.out_dir);
    const auto paths = pipeline::Paths::in(cfg.out_dir);
    const std::string csv = dataset_csv.empty() ? paths.dataset_csv : dataset_csv;
    const std::string meta = csv.substr(0, csv.rfind('.')) + ".meta";

    const Dataset corpus = load_dataset(csv, meta, &robot);
    auto out = pipeline::run_train(cfg, robot, corpus);
    save_vae(out.model, paths.model);
    save_train_report(out.report, paths.train_report);
    std::cout << "wrote " << paths.model << " (held-out reconstruction " << out.report.heldout_reconstruction
              << ", flag accuracy " << out.report.heldout_flag_accuracy << ")\n";
    return 0;
}

int run_build_graph_cmd(const CommonArgs& a, const std::string& model_path, const std::string& dataset_csv) {
    const RunConfig cfg = resolve_config(a);
    const RobotModel robot = resolve_robot(cfg.robot_ref);
    fs::create_directories(cfg.out_dir);
    const auto paths = pipeline::Paths::in(cfg.out_dir);
    const std::string csv = dataset_csv.empty() ? paths.dataset_csv : dataset_csv;
    const std::string meta = csv.substr(0, csv.rfind('.')) + ".meta";
    const std::string mp = model_path.empty() ? paths.model : model_path;

    const Dataset corpus = load_dataset(csv, meta, &robot);
    const VaeModel model = load_vae(mp);
    auto out = pipeline::run_build_graph(cfg, robot, corpus, model);
    save_roadmap(out.roadmap, paths.roadmap);
    save_embedding_reports_csv(out.reports, paths.embedding_csv);
    pipeline::save_latent_cloud(corpus, model, paths.latent_csv);
    std::cout << "wrote " << paths.roadmap << " (" << out.roadmap.size() << " nodes, "
              << out.connect.components_before << " components before repair, " << out.connect.dropped_nodes
              << " dropped)\n";
    std::cout << "grid stamping: " << out.grid.safe << "/" << out.grid.evaluated << " safe, decoder-GJK agreement "
              << (out.grid.evaluated ? static_cast<double>(out.grid.stamp_gjk_agree) / out.grid.evaluated : 0.0)
              << "\n";
    return 0;
}

int run_simulate_cmd(const CommonArgs& a, const std::string& roadmap_path, const std::string& model_path,
                     const std::string& scenario_ref, std::uint64_t run_seed, double jitter) {
    const RunConfig cfg = resolve_config(a);
    const RobotModel robot = resolve_robot(cfg.robot_ref);
    fs::create_directories(cfg.out_dir);
    const auto paths = pipeline::Paths::in(cfg.out_dir);
    const std::string rp = roadmap_path.empty() ? paths.roadmap : roadmap_path;
    const std::string mp = model_path.empty() ? paths.model : model_path;

    const Roadmap roadmap = load_roadmap(rp);
    const VaeModel model = load_vae(mp);
    const Scenario scenario = resolve_scenario(scenario_ref);
    if (scenario.robot_ref != cfg.robot_ref && resolve_robot(scenario.robot_ref).content_hash() != robot.content_hash())
        throw InputError("scenario '" + scenario.id + "' references a different robot");

    auto out = pipeline::run_simulate(cfg, robot, roadmap, model, scenario, run_seed, jitter);

    const std::string tag = scenario.id + "_" + std::to_string(run_seed);
    const std::string trace_path = cfg.out_dir + "/trace_" + tag + ".jsonl";
    save_trace(out.trace, trace_path);

    nlohmann::json summary;
    summary["scenario"] = scenario.id;
    summary["run_seed"] = run_seed;
    summary["status"] = plan_status_name(out.final_state.status);
    summary["failure_reason"] = out.final_state.failure_reason;
    summary["ticks"] = out.trace.records.size();
    summary["reroutes"] = out.final_state.reroute_count;
    summary["tool_version"] = kToolVersion;
    summary["config_hash"] = hex64(cfg.hash());
    const std::string summary_path = cfg.out_dir + "/summary_" + tag + ".json";
    std::ofstream sf(summary_path);
    sf << summary.dump(2) << "\n";

    std::cout << "wrote " << trace_path << " (" << out.trace.records.size() << " ticks, status "
              << plan_status_name(out.final_state.status)
              << (out.final_state.failure_reason.empty() ? "" : ": " + out.final_state.failure_reason) << ", "
              << out.final_state.reroute_count << " reroutes)\n";
    return out.final_state.status == PlanStatus::Reached ? 0 : 4;
}

int run_verify_cmd(const std::string& trace_path, const std::string& scenario_ref, const std::string& robot_ref) {
    const Trace trace = load_trace(trace_path);
    const Scenario scenario = resolve_scenario(scenario_ref);
    const RobotModel robot = resolve_robot(robot_ref);
    const VerifyReport rep = verify_trace(trace, scenario, robot);
    std::cout << format_report(rep);
    if (!rep.lineage_ok) return 3;
    return rep.ok() ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent-manifold motion planning pipeline"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, graph_args, sim_args;
    std::string dataset_csv, model_path, roadmap_path, scenario_ref, trace_path, robot_ref = "builtin:panda";
    std::uint64_t run_seed = 0;
    double jitter = 0.0;

    auto* gen = app.add_subcommand("generate", "generate the labeled sample corpus");
    add_common(gen, gen_args);

    auto* train = app.add_subcommand("train", "train the variational autoencoder");
    add_common(train, train_args);
    train->add_option("--dataset", dataset_csv, "dataset csv (default: <out>/dataset.csv)");

    auto* graph = app.add_subcommand("build-graph", "build the safe-node latent roadmap");
    add_common(graph, graph_args);
    graph->add_option("--model", model_path, "model file (default: <out>/vae.bin)");
    graph->add_option("--dataset", dataset_csv, "dataset csv (default: <out>/dataset.csv)");

    auto* sim = app.add_subcommand("simulate", "run the replanning executive on a scenario");
    add_common(sim, sim_args);
    sim->add_option("--roadmap", roadmap_path, "roadmap file (default: <out>/roadmap.txt)");
    sim->add_option("--model", model_path, "model file (default: <out>/vae.bin)");
    sim->add_option("--scenario", scenario_ref, "builtin scenario id or scenario file path")->required();
    sim->add_option("--run-seed", run_seed, "seed for start/goal jitter (0 = exact scenario joints)");
    sim->add_option("--jitter", jitter, "start/goal jitter amplitude in radians");

    auto* verify = app.add_subcommand("verify", "independently replay and check a trace");
    verify->add_option("--trace", trace_path, "trace jsonl file")->required();
    verify->add_option("--scenario", scenario_ref, "builtin scenario id or scenario file path")->required();
    verify->add_option("--robot", robot_ref, "robot reference (builtin:panda or file)");

    auto* scenarios = app.add_subcommand("scenarios", "list builtin scenario ids");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return run_generate_cmd(gen_args);
        if (train->parsed()) return run_train_cmd(train_args, dataset_csv);
        if (graph->parsed()) return run_build_graph_cmd(graph_args, model_path, dataset_csv);
        if (sim->parsed()) return run_simulate_cmd(sim_args, roadmap_path, model_path, scenario_ref, run_seed, jitter);
        if (verify->parsed()) return run_verify_cmd(trace_path, scenario_ref, robot_ref);
        if (scenarios->parsed()) {
            for (const auto& id : builtin_scenario_ids()) std::cout << id << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
