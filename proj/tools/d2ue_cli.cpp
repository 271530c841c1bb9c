// d2ue: synthetic benchmark, ensemble training, scoring, ablations, heatmaps.
//
//   d2ue synth   [--config PATH] [--out DIR] ...
//   d2ue train   [--seed N] [--similarity KIND] [--lambda X] ...
//   d2ue eval    [--method ens_recon|output_unc|dsu]
//   d2ue ablate  [--seeds 0,1,2,3,4]
//   d2ue heatmap [--ids 0,57]
//
// On failure exactly one line is printed to stderr:
//   error kind=<kind> message="<text>"

#include "d2ue/error.hpp"
#include "d2ue/pipeline.hpp"
#include "d2ue/run_config.hpp"
#include "d2ue/text.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> seed, seeds, method, similarity, lambda, out, ids;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "key = value config file");
    cmd->add_option("--seed", o.seed, "training master seed");
    cmd->add_option("--seeds", o.seeds, "comma-separated seed list (ablate)");
    cmd->add_option("--method", o.method, "ens_recon, output_unc or dsu");
    cmd->add_option("--similarity", o.similarity, "cka, euclidean, manhattan, cosine, pearson or none");
    cmd->add_option("--lambda", o.lambda, "repulsion weight");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--ids", o.ids, "comma-separated test image ids (heatmap)");
    cmd->add_option("--set", o.sets, "extra key=value override (repeatable)");
}

d2ue::RunConfig resolve(const Overrides& o) {
    d2ue::RunConfig cfg;
    if (!o.config.empty()) cfg.apply_file(o.config);
    auto apply = [&](const char* key, const std::optional<std::string>& v) {
        if (v) cfg.set(key, *v);
    };
    apply("seed", o.seed);
    apply("seeds", o.seeds);
    apply("method", o.method);
    apply("similarity", o.similarity);
    apply("lambda", o.lambda);
    apply("out", o.out);
    apply("ids", o.ids);
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw d2ue::ConfigError("--set expects key=value, got '" + s + "'");
        cfg.set(d2ue::text::trim(std::string_view(s).substr(0, eq)), std::string_view(s).substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep-ensemble anomaly detection with feature-space repulsion and dual-space uncertainty"};
    app.require_subcommand(1);
    Overrides o;
    auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark");
    auto* train = app.add_subcommand("train", "train an ensemble");
    auto* eval = app.add_subcommand("eval", "score the test split and write AUROC/AP");
    auto* ablate = app.add_subcommand("ablate", "component and similarity-kernel ablations over seeds");
    auto* heatmap = app.add_subcommand("heatmap", "export anomaly maps as PGM");
    for (auto* c : {synth, train, eval, ablate, heatmap}) add_common(c, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error kind=usage message=\"" << one_line(e.what()) << "\"\n";
        return 2;
    }

    try {
        const auto cfg = resolve(o);
        if (synth->parsed()) {
            std::cout << "dataset: " << d2ue::cmd_synth(cfg).string() << "\n";
        } else if (train->parsed()) {
            std::cout << "ensemble: " << d2ue::cmd_train(cfg).string() << "\n";
        } else if (eval->parsed()) {
            const auto r = d2ue::cmd_eval(cfg);
            std::cout << "auroc=" << d2ue::text::format_double(r.auroc)
                      << " ap=" << d2ue::text::format_double(r.average_precision) << "\n"
                      << "metrics: " << r.metrics_csv.string() << "\n";
        } else if (ablate->parsed()) {
            const auto r = d2ue::cmd_ablate(cfg);
            for (const auto& s : r.summaries) {
                std::cout << "table" << s.table << " " << s.variant << " [" << s.similarity
                          << "] auroc=" << d2ue::text::format_double(s.auroc_mean) << "+-"
                          << d2ue::text::format_double(s.auroc_std) << "\n";
            }
            std::cout << "ablation: " << r.csv.string() << "\n";
        } else if (heatmap->parsed()) {
            for (const auto& p : d2ue::cmd_heatmap(cfg)) std::cout << p.string() << "\n";
        }
    } catch (const d2ue::Error& e) {
        std::cerr << "error kind=" << e.kind() << " message=\"" << one_line(e.what()) << "\"\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error kind=internal message=\"" << one_line(e.what()) << "\"\n";
        return 1;
    }
    return 0;
}
