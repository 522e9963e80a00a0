#include "wlkf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace wlkf {

namespace {

struct TrialRecord {
    bool ok = true;
    std::string diagnostic;
    // [variant][node]
    std::vector<std::vector<double>> node_steady;
    std::vector<std::vector<double>> node_mean;
    std::vector<std::vector<CVector>> node_error; ///< window-averaged error
};

struct BlockResult {
    std::vector<TrialRecord> trials;
    std::vector<std::vector<double>> curve; ///< [variant][step], sums over the block's good trials
};

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double standard_error_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0;
    const double m = mean_of(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

class PointRunner {
public:
    PointRunner(const ScenarioConfig& config, const StateSpaceModel& model, const std::vector<CompiledFilter>& filters)
        : config_(config), model_(model), filters_(filters) {}

    BlockResult run_block(int block) const {
        const int first = block * trial_block;
        const int last = std::min(config_.trials, first + trial_block);
        const int horizon = config_.horizon;
        const int window_start = horizon - config_.steady_window();
        const auto nodes = static_cast<std::size_t>(model_.node_count());
        const auto variants = filters_.size();

        Simulator sim(model_);
        Trajectory traj;
        std::vector<std::unique_ptr<FilterRunner>> runners;
        for (const auto& f : filters_) runners.push_back(f.runner());

        BlockResult out;
        out.curve.assign(variants, std::vector<double>(static_cast<std::size_t>(horizon), 0.0));
        std::vector<std::vector<double>> curve(variants, std::vector<double>(static_cast<std::size_t>(horizon)));
        CVector estimate;
        for (int t = first; t < last; ++t) {
            TrialRecord rec;
            rec.node_steady.assign(variants, std::vector<double>(nodes, 0.0));
            rec.node_mean.assign(variants, std::vector<double>(nodes, 0.0));
            rec.node_error.assign(variants, std::vector<CVector>(nodes, CVector::Zero(model_.state_dim())));
            try {
                sim.run(horizon, RngStream(config_.seed, static_cast<std::uint64_t>(t)), traj);
                for (std::size_t v = 0; v < variants && rec.ok; ++v) {
                    auto& r = *runners[v];
                    r.reset();
                    for (int n = 0; n < horizon; ++n) {
                        r.step(n, traj.observations[static_cast<std::size_t>(n)]);
                        const CVector& x = traj.states[static_cast<std::size_t>(n)];
                        double total = 0;
                        for (std::size_t i = 0; i < nodes; ++i) {
                            r.estimate(static_cast<int>(i), estimate);
                            estimate = x - estimate;
                            const double sq = estimate.squaredNorm();
                            total += sq;
                            rec.node_mean[v][i] += sq;
                            if (n >= window_start) {
                                rec.node_steady[v][i] += sq;
                                rec.node_error[v][i] += estimate;
                            }
                        }
                        curve[v][static_cast<std::size_t>(n)] = total / static_cast<double>(nodes);
                    }
                    for (std::size_t i = 0; i < nodes; ++i) {
                        rec.node_mean[v][i] /= horizon;
                        rec.node_steady[v][i] /= horizon - window_start;
                        rec.node_error[v][i] /= static_cast<double>(horizon - window_start);
                        if (!std::isfinite(rec.node_mean[v][i])) {
                            rec.ok = false;
                            rec.diagnostic = "trial " + std::to_string(t) + ": " + std::string(to_string(filters_[v].variant())) +
                                             " estimate became non-finite";
                        }
                    }
                }
            } catch (const Error& e) {
                if (!is_numerical(e.code())) throw;
                rec.ok = false;
                rec.diagnostic = "trial " + std::to_string(t) + ": " + e.what();
            }
            if (rec.ok)
                for (std::size_t v = 0; v < variants; ++v)
                    for (int n = 0; n < horizon; ++n)
                        out.curve[v][static_cast<std::size_t>(n)] += curve[v][static_cast<std::size_t>(n)];
            out.trials.push_back(std::move(rec));
        }
        return out;
    }

private:
    const ScenarioConfig& config_;
    const StateSpaceModel& model_;
    const std::vector<CompiledFilter>& filters_;
};

bool analysable(const NetworkFilterModel<cplx>* fm, const StateSpaceModel& model) {
    return fm && (fm->algebra == Algebra::augmented || model.strictly_linear());
}

EtaPoint run_point(const ScenarioConfig& config, const Topology& topology, const DiffusionWeights& weights,
                   double eta, std::vector<std::string>& diagnostics) {
    const StateSpaceModel model = build_model(config, eta);
    const FilterPrior prior = build_prior(config, model);
    std::vector<CompiledFilter> filters;
    for (auto v : config.variants) filters.emplace_back(v, model, topology, weights, prior, config.horizon);

    const auto variants = filters.size();
    const auto nodes = static_cast<std::size_t>(model.node_count());
    const int blocks = (config.trials + trial_block - 1) / trial_block;
    std::vector<BlockResult> results(static_cast<std::size_t>(blocks));

    const PointRunner runner(config, model, filters);
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int threads = std::min(blocks, config.threads > 0 ? config.threads : static_cast<int>(hw));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    auto work = [&] {
        for (int b = next++; b < blocks; b = next++) {
            try {
                results[static_cast<std::size_t>(b)] = runner.run_block(b);
            } catch (...) {
                std::lock_guard lock(failure_lock);
                if (!failure) failure = std::current_exception();
                next = blocks;
            }
        }
    };
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int k = 0; k < threads; ++k) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    EtaPoint point;
    point.eta = eta;
    point.variants.resize(variants);
    std::vector<std::vector<BiasAccumulator>> bias(variants,
                                                   std::vector<BiasAccumulator>(nodes, BiasAccumulator(model.state_dim())));
    for (std::size_t v = 0; v < variants; ++v) {
        auto& s = point.variants[v];
        s.variant = filters[v].variant();
        s.steady_mse.assign(nodes, 0.0);
        s.mean_mse.assign(nodes, 0.0);
        s.bias_norm.assign(nodes, 0.0);
        s.network_curve.assign(static_cast<std::size_t>(config.horizon), 0.0);
        s.trial_node_steady.assign(nodes, {});
    }
    for (const auto& block : results) {
        for (const auto& rec : block.trials) {
            if (!rec.ok) {
                diagnostics.push_back(rec.diagnostic);
                continue;
            }
            ++point.trials;
            for (std::size_t v = 0; v < variants; ++v) {
                auto& s = point.variants[v];
                double network = 0;
                for (std::size_t i = 0; i < nodes; ++i) {
                    s.steady_mse[i] += rec.node_steady[v][i];
                    s.mean_mse[i] += rec.node_mean[v][i];
                    s.trial_node_steady[i].push_back(rec.node_steady[v][i]);
                    bias[v][i].add(rec.node_error[v][i]);
                    network += rec.node_steady[v][i];
                }
                s.trial_steady.push_back(network / static_cast<double>(nodes));
            }
        }
        for (std::size_t v = 0; v < variants; ++v)
            for (std::size_t n = 0; n < block.curve[v].size(); ++n) point.variants[v].network_curve[n] += block.curve[v][n];
    }
    if (point.trials == 0)
        throw Error(ErrorCode::non_finite, "every trial failed at eta " + std::to_string(eta) +
                                               (diagnostics.empty() ? std::string() : ": " + diagnostics.back()));

    for (std::size_t v = 0; v < variants; ++v) {
        auto& s = point.variants[v];
        const double t = point.trials;
        for (auto& x : s.network_curve) x /= t;
        s.bias.resize(nodes);
        for (std::size_t i = 0; i < nodes; ++i) {
            s.steady_mse[i] /= t;
            s.mean_mse[i] /= t;
            if (bias[v][i].count() >= minimum_bias_trials) {
                s.bias[i] = bias[v][i].estimate();
                s.bias_norm[i] = s.bias[i]->norm();
            } else {
                // Mean only; the standard error needs more trials.
                CVector m = CVector::Zero(model.state_dim());
                for (const auto& block : results)
                    for (const auto& rec : block.trials)
                        if (rec.ok) m += rec.node_error[v][i];
                s.bias_norm[i] = (m / t).norm();
            }
        }
        if (config.analysis && analysable(filters[v].complex_model(), model)) {
            PropagationOptions opt;
            opt.steps = config.horizon;
            opt.initial_error = deterministic_initial_error(*filters[v].complex_model(), model.initial_state);
            const auto prop = propagate_covariance(model, *filters[v].complex_model(), *filters[v].complex_schedule(), opt);
            // Window average of the theoretical MSE, matching the empirical steady-state definition.
            std::vector<double> window_theory(nodes, 0.0);
            const int start = config.horizon - config.steady_window();
            for (int n = start; n < config.horizon; ++n)
                for (std::size_t i = 0; i < nodes; ++i)
                    window_theory[i] += prop.mse[static_cast<std::size_t>(n)][i] / (config.horizon - start);
            MseReport report = make_mse_report(prop, s.steady_mse);
            report.theoretical = window_theory;
            report.network_theoretical = mean_of(window_theory);
            s.report = std::move(report);
            s.settled_at = prop.settled_at;
        }
    }
    return point;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

double VariantSeries::network_steady() const { return mean_of(trial_steady); }

double VariantSeries::standard_error() const { return standard_error_of(trial_steady); }

double VariantSeries::node_standard_error(std::size_t node) const { return standard_error_of(trial_node_steady.at(node)); }

const VariantSeries& EtaPoint::at(FilterVariant variant) const {
    for (const auto& v : variants)
        if (v.variant == variant) return v;
    throw Error(ErrorCode::config, "variant " + std::string(to_string(variant)) + " was not run");
}

double paired_standard_error(const VariantSeries& a, const VariantSeries& b) {
    if (a.trial_steady.size() != b.trial_steady.size())
        throw Error(ErrorCode::dimension_mismatch, "paired comparison needs the same trials");
    std::vector<double> d(a.trial_steady.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = a.trial_steady[k] - b.trial_steady[k];
    return standard_error_of(d);
}

MseSeries run_scenario(const ScenarioConfig& config) {
    config.validate();
    const Topology topology = build_topology(config);
    const DiffusionWeights weights = build_weights(config, topology);
    MseSeries series;
    series.scenario = config.name;
    series.seed = config.seed;
    series.horizon = config.horizon;
    series.window = config.steady_window();
    for (double eta : config.eta_sweep) series.points.push_back(run_point(config, topology, weights, eta, series.diagnostics));
    return series;
}

// ---------------------------------------------------------------------------

std::vector<CsvRow> csv_rows(const MseSeries& series) {
    std::vector<CsvRow> rows;
    for (const auto& p : series.points)
        for (const auto& v : p.variants)
            for (std::size_t i = 0; i < v.steady_mse.size(); ++i)
                rows.push_back({series.scenario, std::string(to_string(v.variant)), p.eta, static_cast<int>(i + 1),
                                v.steady_mse[i], v.mean_mse[i], v.bias_norm[i], p.trials, series.seed});
    return rows;
}

void write_csv(std::ostream& out, const MseSeries& series) {
    out << csv_header << '\n';
    for (const auto& r : csv_rows(series)) {
        out << r.scenario << ',' << r.variant << ',' << format_double(r.eta) << ',' << r.node << ','
            << format_double(r.steady_state_mse) << ',' << format_double(r.mean_mse) << ','
            << format_double(r.bias_norm) << ',' << r.trials << ',' << r.seed << '\n';
    }
}

void emit_csv(const MseSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
    write_csv(out, series);
    out.flush();
    if (!out) throw Error(ErrorCode::io, "write to " + path.string() + " failed");
}

std::vector<CsvRow> parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != csv_header) throw Error(ErrorCode::io, "unexpected CSV header");
    std::vector<CsvRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 9) throw Error(ErrorCode::io, "CSV line " + std::to_string(line_no) + ": expected 9 fields");
        try {
            rows.push_back({f[0], f[1], std::stod(f[2]), std::stoi(f[3]), std::stod(f[4]), std::stod(f[5]),
                            std::stod(f[6]), std::stoi(f[7]), std::stoull(f[8])});
        } catch (const std::exception&) {
            throw Error(ErrorCode::io, "CSV line " + std::to_string(line_no) + ": malformed number");
        }
    }
    return rows;
}

std::vector<CsvRow> load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    return parse_csv(in);
}

} // namespace wlkf
