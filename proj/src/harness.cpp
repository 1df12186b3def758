#include "lcgf/harness.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <unistd.h>

#include "lcgf/centering.hpp"
#include "lcgf/comparison.hpp"
#include "lcgf/deviation.hpp"
#include "lcgf/digest.hpp"
#include "lcgf/experiments.hpp"
#include "lcgf/green.hpp"
#include "lcgf/psi.hpp"
#include "lcgf/rng.hpp"
#include "lcgf/three_field.hpp"

#ifndef LCGF_VERSION
#define LCGF_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace lcgf {

namespace {

const std::set<std::string> kKinds{"covtest", "extremes",   "cluster", "tail",   "localization",
                                   "threefield", "surrogate", "compare", "perturb"};
const std::set<std::string> kFieldModels{"dgff", "psi", "ibrw", "mibrw"};

// Collects field-level problems so one run reports all of them.
struct Diagnostics {
    std::vector<std::string> errors;
    void add(const std::string& field, const std::string& msg) { errors.push_back(field + ": " + msg); }
    void raise() const {
        if (errors.empty()) return;
        std::string msg = "invalid config";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
};

void check_keys(const json& j, const std::set<std::string>& known, const std::string& where, Diagnostics& d) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) d.add(where + it.key(), "unknown key");
}

template <class T>
void read(const json& j, const char* key, T& dst, const std::string& where, Diagnostics& d) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception&) {
        d.add(where + key, "wrong type");
    }
}

// A scalar is accepted where a list is expected.
template <class T>
void read_list(const json& j, const char* key, std::vector<T>& dst, const std::string& where, Diagnostics& d) {
    if (!j.contains(key)) return;
    try {
        const auto& v = j.at(key);
        dst = v.is_array() ? v.get<std::vector<T>>() : std::vector<T>{v.get<T>()};
    } catch (const json::exception&) {
        d.add(where + key, "wrong type");
    }
}

bool power_of_two(int N) { return N >= 2 && (N & (N - 1)) == 0; }
int log2_int(int N) {
    int n = 0;
    while ((1 << n) < N) ++n;
    return n;
}

VarianceProfile parse_profile(const json& j, Diagnostics& d, bool& is_constant) {
    is_constant = false;
    try {
        if (j.is_string()) {
            const auto s = j.get<std::string>();
            if (s == "two-speed") return VarianceProfile::two_speed();
            if (s == "constant" || s == "sigma-one") {
                is_constant = true;
                return VarianceProfile::constant();
            }
            d.add("profile", "unknown profile name '" + s + "' (two-speed, constant, or an object)");
            return VarianceProfile::two_speed();
        }
        if (j.is_object() && j.contains("file")) {
            if (j.size() != 1) d.add("profile", "'file' cannot be combined with other keys");
            return load_profile(j.at("file").get<std::string>());
        }
        if (j.is_object()) return profile_from_json_text(j.dump());
        d.add("profile", "expected a name or an object");
    } catch (const ConfigError& e) {
        d.add("profile", e.what());
    } catch (const std::exception& e) {
        d.add("profile", e.what());
    }
    return VarianceProfile::two_speed();
}

void validate(ExperimentConfig& c, bool constant_profile, Diagnostics& d) {
    if (!kKinds.count(c.kind)) d.add("kind", "must be one of covtest, extremes, cluster, tail, localization, threefield, surrogate, compare, perturb");
    if (c.replicas < 1) d.add("replicas", "must be >= 1");
    if (c.kind != "compare") {
        if (c.sides.empty()) d.add("N", "must be non-empty");
        for (int N : c.sides)
            if (!power_of_two(N)) d.add("N", "side " + std::to_string(N) + " is not a power of two >= 2");
    }
    const bool sigma_one_ok = c.kind == "covtest" && constant_profile;
    if (!sigma_one_ok && c.kind != "compare") {
        const auto rep = check_assumption(c.profile);
        if (!rep.pass) {
            std::ostringstream s;
            s << "profile fails the admissibility check (below diagonal " << rep.below_diagonal << ", sigma0 < 1 "
              << rep.sigma0_below_one << ", sigma1 > 1 " << rep.sigma1_above_one << ", normalized " << rep.normalized
              << ")";
            d.add("profile", s.str());
        }
    }
    const bool field_kind = c.kind == "extremes" || c.kind == "tail" || c.kind == "cluster" ||
                            c.kind == "localization" || c.kind == "perturb" || c.kind == "covtest";
    if (field_kind && !kFieldModels.count(c.model)) d.add("model", "must be one of dgff, psi, ibrw, mibrw");
    if (c.kind == "localization" && c.model != "ibrw" && c.model != "mibrw") d.add("model", "localization needs ibrw or mibrw");
    if ((c.kind == "extremes" || c.kind == "tail") && c.z_grid.empty()) d.add("z_grid", "must be non-empty");
    if (c.kind == "perturb" && !c.perturb.epsilons.empty() && c.z_grid.empty()) d.add("z_grid", "needed for epsilons");
    if ((c.kind == "cluster" || c.kind == "localization") && c.r_grid.empty()) d.add("r_grid", "must be non-empty");
    for (double r : c.r_grid)
        if (!(r > 1.0)) d.add("r_grid", "entries must exceed 1");
    if (c.kind == "localization") {
        if (c.gamma_grid.empty()) d.add("gamma_grid", "must be non-empty");
        if (c.s_grid.empty()) d.add("s_grid", "must be non-empty");
    }
    for (double g : c.gamma_grid)
        if (!(g > 0.0 && g < 1.0)) d.add("gamma_grid", "entries must lie in (0, 1)");
    if (c.kind == "covtest")
        for (int N : c.sides)
            if (N > 64) d.add("N", "covtest uses dense covariances, N <= 64");
    if (!(c.delta >= 0.0 && c.delta < 0.5)) d.add("delta", "must lie in [0, 1/2)");
    if (c.kind == "threefield" || c.kind == "surrogate") {
        if (c.threefield.ladder.empty()) d.add("threefield.ladder", "must be non-empty");
        for (int N : c.sides) {
            for (const auto& [kp, lp] : c.threefield.ladder) {
                ThreeFieldParams p;
                p.n = log2_int(N);
                p.k = c.threefield.k;
                p.l = c.threefield.l;
                p.kp = kp;
                p.lp = lp;
                p.profile = c.profile;
                p.alpha = c.threefield.alpha.value_or(0.0);
                try {
                    p.validate();
                } catch (const std::exception& e) {
                    d.add("threefield", "N=" + std::to_string(N) + ": " + e.what());
                }
            }
        }
        if (c.kind == "surrogate" && c.threefield.beta_z.empty()) d.add("threefield.beta_z", "must be non-empty");
    }
    if (c.kind == "perturb") {
        for (int r : c.perturb.r1)
            for (int N : c.sides)
                if (r < 1 || N % r) d.add("perturb.r1", std::to_string(r) + " does not divide N=" + std::to_string(N));
        for (int r : c.perturb.r2)
            for (int N : c.sides)
                if (r < 1 || N % r) d.add("perturb.r2", std::to_string(r) + " does not divide N=" + std::to_string(N));
        if (c.perturb.r1.empty() || c.perturb.r2.empty()) d.add("perturb", "r1 and r2 must be non-empty");
    }
    if (c.kind == "compare") {
        if (c.compare.instances < 1) d.add("compare.instances", "must be >= 1");
        if (c.compare.n_min < 2 || c.compare.n_max < c.compare.n_min) d.add("compare", "need 2 <= n_min <= n_max");
        if (c.compare.mc_replicas < 100) d.add("compare.mc_replicas", "must be >= 100");
    }
    if (!c.sweep.is_null()) {
        if (!c.sweep.is_object() || !c.sweep.contains("grid") || !c.sweep["grid"].is_object()) {
            d.add("sweep", "expected {\"grid\": {key: [values]}, \"cap\": int}");
        } else {
            check_keys(c.sweep, {"grid", "cap"}, "sweep.", d);
            for (auto it = c.sweep["grid"].begin(); it != c.sweep["grid"].end(); ++it)
                if (!it.value().is_array()) d.add("sweep.grid." + it.key(), "expected a list of values");
        }
    }
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Files written by one run, relative to its root.
class RunWriter {
public:
    explicit RunWriter(fs::path root) : root_(std::move(root)) {}
    std::ofstream open(const std::string& rel) {
        const auto p = root_ / rel;
        fs::create_directories(p.parent_path());
        std::ofstream out(p);
        if (!out) throw ConfigError("cannot write " + p.string());
        out << std::setprecision(17);
        return out;
    }
    void json_file(const std::string& rel, const json& j) { open(rel) << j.dump(2) << '\n'; }
    [[nodiscard]] const fs::path& root() const { return root_; }

private:
    fs::path root_;
};

struct StageTimer {
    json stages = json::array();
    template <class F>
    auto run(const std::string& name, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        auto record = [&] {
            stages.push_back({{"stage", name},
                              {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}});
        };
        try {
            if constexpr (std::is_void_v<decltype(f())>) {
                f();
                record();
            } else {
                auto r = f();
                record();
                return r;
            }
        } catch (const StageError&) {
            throw;
        } catch (const NumericError& e) {
            throw StageError(name, e.what());
        }
    }
};

json proportion_json(const Proportion& p) { return {{"hits", p.hits}, {"trials", p.trials}, {"p", p.p}, {"lo", p.lo}, {"hi", p.hi}}; }

std::string tag(int N) { return "N" + std::to_string(N); }

double fitted_alpha(const ExperimentConfig& c) {
    if (c.threefield.alpha) return *c.threefield.alpha;
    return 2.0 * deviation_alpha(CovModel::Psi, c.profile, {16, 32, 64}, 0.1).alpha_hat;
}

void write_argmax_trajectories(RunWriter& w, const FieldModel& m, std::int64_t replicas, int N) {
    auto out = w.open("trajectories_" + tag(N) + ".csv");
    const int n = log2_int(N);
    out << "replica,x,y";
    for (int t = 0; t <= n; ++t) out << ",t" << t;
    out << '\n';
    const std::size_t vol = static_cast<std::size_t>(N) * N;
    for (std::int64_t r = 0; r < replicas; ++r) {
        std::vector<double> f;
        Trajectories traj;
        m.draw(static_cast<std::uint64_t>(r), f, &traj);
        const auto idx = static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
        out << r << ',' << idx % N << ',' << idx / N;
        for (int t = 0; t <= traj.levels; ++t) out << ',' << traj.at(t, idx, vol);
        out << '\n';
    }
}

// ---- kinds ----------------------------------------------------------------

json run_covtest(const ExperimentConfig& c, std::uint64_t seed, int, RunWriter& w, StageTimer& st) {
    json rep, summary;
    json identity = json::array();
    const bool constant = std::abs(c.profile.sigma0() - 1.0) < 1e-15 && std::abs(c.profile.sigma1() - 1.0) < 1e-15;
    if (constant) {
        st.run("sigma-one identity", [&] {
            for (int N : c.sides) {
                const BoxSpec spec(log2_int(N));
                const auto g = green_matrix(spec);
                const auto a = psi_functional_matrix(spec, c.profile);
                const double diff = (a.A * g.m * a.A.transpose() - g.m).cwiseAbs().maxCoeff();
                identity.push_back({{"N", N}, {"max_abs_diff", diff}, {"pass", diff <= 1e-9}});
                summary["identity_diff_" + tag(N)] = diff;
            }
        });
        rep["sigma_one_identity"] = identity;
    }
    if (c.model != "ibrw") {
        const auto model = c.model == "dgff" ? CovModel::Dgff : c.model == "psi" ? CovModel::Psi : CovModel::Mibrw;
        const auto dev = st.run("deviation", [&] { return deviation_alpha(model, c.profile, c.sides, c.delta); });
        auto out = w.open("deviation.csv");
        out << "N,sup,u_x,u_y,v_x,v_y\n";
        json rows = json::array();
        for (std::size_t i = 0; i < dev.sides.size(); ++i) {
            out << dev.sides[i] << ',' << dev.sup[i] << ',' << dev.arg_u[i].x << ',' << dev.arg_u[i].y << ','
                << dev.arg_v[i].x << ',' << dev.arg_v[i].y << '\n';
            rows.push_back({{"N", dev.sides[i]}, {"sup", dev.sup[i]}});
        }
        rep["deviation"] = {{"formula", dev.formula}, {"delta", dev.delta}, {"per_N", rows},
                            {"alpha_hat", dev.alpha_hat}, {"growth", dev.growth}};
        summary["alpha_hat"] = dev.alpha_hat;
        summary["growth"] = dev.growth;
    }
    if (c.replicas >= 2) {
        json laws = json::array();
        st.run("law check", [&] {
            for (int N : c.sides) {
                if (N > 16) continue;
                const auto m = make_field_model(c.model, N, c.profile, seed);
                const auto exact = exact_model_covariance(c.model, N, c.profile);
                const auto lc = model_law_check(m, exact, static_cast<int>(c.replicas), c.k_se);
                laws.push_back({{"N", N}, {"entries", lc.entries}, {"violations", lc.violations},
                                {"worst_z", lc.worst_z}, {"k_se", c.k_se}, {"pass", lc.ok()}});
                summary["law_violations_" + tag(N)] = lc.violations;
            }
        });
        rep["law_check"] = laws;
    }
    rep["summary"] = summary;
    return rep;
}

json run_extremes(const ExperimentConfig& c, std::uint64_t seed, int workers, bool keep, RunWriter& w,
                  StageTimer& st, bool tail_only) {
    json rep, per = json::array(), summary;
    for (int N : c.sides) {
        const auto m = make_field_model(c.model, N, c.profile, seed);
        const auto stats = st.run("sample " + tag(N), [&] { return collect_maxima(m, c.replicas, m_N(N), workers); });
        const auto x = centered_values(stats);
        if (!tail_only) {
            auto out = w.open("maxima_" + tag(N) + ".csv");
            out << "replica,max,centered,x,y\n";
            for (const auto& s : stats) out << s.replica << ',' << s.max << ',' << s.centered << ',' << s.argmax.x << ',' << s.argmax.y << '\n';
        }
        const auto tail = st.run("tail " + tag(N), [&] { return tail_slope(x, c.z_grid); });
        {
            auto out = w.open("tail_" + tag(N) + ".csv");
            out << "z,hits,trials,p,lo,hi,used\n";
            for (const auto& p : tail.points)
                out << p.z << ',' << p.survival.hits << ',' << p.survival.trials << ',' << p.survival.p << ','
                    << p.survival.lo << ',' << p.survival.hi << ',' << p.used << '\n';
        }
        json e = {{"N", N}, {"centering", m_N(N)}, {"replicas", c.replicas}};
        e["tail"] = {{"fitted", tail.fitted}, {"slope", tail.slope}, {"slope_se", tail.slope_se},
                     {"slope_lo", tail.slope_lo}, {"slope_hi", tail.slope_hi}, {"warning", tail.warning}};
        summary["tail_slope_" + tag(N)] = tail.fitted ? json(tail.slope) : json(nullptr);
        if (!tail_only) {
            const auto s = summarize(stats);
            const auto g = gumbel_mixture_shape(x);
            e["summary"] = {{"mean", s.mean}, {"q10", s.q10}, {"median", s.median}, {"q90", s.q90}, {"iqr", s.iqr()}};
            e["gumbel"] = {{"slope", g.slope}, {"slope_se", g.slope_se}, {"curvature", g.curvature},
                           {"curvature_se", g.curvature_se}, {"points", g.points}};
            summary["median_" + tag(N)] = s.median;
            summary["gumbel_slope_" + tag(N)] = g.slope;
        }
        if (keep && m.has_trajectories) st.run("trajectories " + tag(N), [&] { write_argmax_trajectories(w, m, c.replicas, N); });
        per.push_back(e);
    }
    rep["per_N"] = per;
    rep["summary"] = summary;
    return rep;
}

json run_cluster(const ExperimentConfig& c, std::uint64_t seed, int workers, RunWriter& w, StageTimer& st) {
    json rep, per = json::array(), summary;
    for (int N : c.sides) {
        const auto m = make_field_model(c.model, N, c.profile, seed);
        const auto pts = st.run("cluster " + tag(N), [&] { return cluster_experiment(m, c.r_grid, c.c, c.replicas, workers); });
        auto out = w.open("cluster_" + tag(N) + ".csv");
        out << "r,threshold,empty_constraint,hits,trials,p,lo,hi\n";
        json rows = json::array();
        for (const auto& p : pts) {
            out << p.r << ',' << p.threshold << ',' << p.empty_constraint << ',' << p.prob.hits << ',' << p.prob.trials
                << ',' << p.prob.p << ',' << p.prob.lo << ',' << p.prob.hi << '\n';
            rows.push_back({{"r", p.r}, {"threshold", p.threshold}, {"empty_constraint", p.empty_constraint},
                            {"prob", proportion_json(p.prob)}});
            std::ostringstream key;
            key << "p_" << tag(N) << "_r" << p.r;
            summary[key.str()] = p.prob.p;
        }
        per.push_back({{"N", N}, {"c", c.c}, {"points", rows}});
    }
    rep["per_N"] = per;
    rep["summary"] = summary;
    return rep;
}

json run_localization(const ExperimentConfig& c, std::uint64_t seed, int workers, bool keep, RunWriter& w,
                      StageTimer& st) {
    json rep, per = json::array(), summary;
    for (int N : c.sides) {
        const auto m = make_field_model(c.model, N, c.profile, seed);
        const auto cells = st.run("localization " + tag(N), [&] {
            return localization_experiment(m, c.profile, c.r_grid, c.gamma_grid, c.s_grid, c.replicas, workers);
        });
        auto out = w.open("localization_" + tag(N) + ".csv");
        out << "r,gamma,s,window_lo,window_hi,qualifying,exiting,fraction,lo,hi\n";
        json rows = json::array();
        for (const auto& cell : cells) {
            const auto win = localization_window(log2_int(N), cell.r);
            const auto f = cell.counts.fraction();
            out << cell.r << ',' << cell.gamma << ',' << cell.s << ',' << win.first << ',' << win.second << ','
                << cell.counts.qualifying << ',' << cell.counts.exiting << ',' << f.p << ',' << f.lo << ',' << f.hi << '\n';
            rows.push_back({{"r", cell.r}, {"gamma", cell.gamma}, {"s", cell.s}, {"fraction", proportion_json(f)}});
            std::ostringstream key;
            key << "exit_" << tag(N) << "_r" << cell.r << "_g" << cell.gamma << "_s" << cell.s;
            summary[key.str()] = f.p;
        }
        if (keep) st.run("trajectories " + tag(N), [&] { write_argmax_trajectories(w, m, c.replicas, N); });
        per.push_back({{"N", N}, {"cells", rows}});
    }
    rep["per_N"] = per;
    rep["summary"] = summary;
    return rep;
}

ThreeFieldParams tf_params(const ExperimentConfig& c, int N, std::pair<int, int> kl, double alpha) {
    ThreeFieldParams p;
    p.n = log2_int(N);
    p.k = c.threefield.k;
    p.l = c.threefield.l;
    p.kp = kl.first;
    p.lp = kl.second;
    p.profile = c.profile;
    p.alpha = alpha;
    return p;
}

json run_threefield(const ExperimentConfig& c, RunWriter& w, StageTimer& st) {
    json rep, rows = json::array(), summary;
    const double alpha = st.run("alpha", [&] { return fitted_alpha(c); });
    auto out = w.open("threefield.csv");
    out << "N,K,L,Kp,Lp,alpha,mean_abs_gap,max_abs_gap,max_a,bound,vstar,classes\n";
    for (int N : c.sides) {
        const auto psi_var = st.run("psi variances " + tag(N), [&] { return PsiOperator(BoxSpec(log2_int(N)), c.profile).variances(); });
        for (const auto& kl : c.threefield.ladder) {
            const auto p = tf_params(c, N, kl, alpha);
            const auto m = st.run("match " + tag(N), [&] { return variance_match_constants(ThreeFieldSampler(p), psi_var); });
            out << N << ',' << (1 << p.k) << ',' << (1 << p.l) << ',' << (1 << p.kp) << ',' << (1 << p.lp) << ','
                << alpha << ',' << m.mean_abs_gap << ',' << m.max_abs_gap << ',' << m.max_a << ',' << m.bound << ','
                << m.vstar_size << ',' << m.classes_used << '\n';
            rows.push_back({{"N", N}, {"Kp", 1 << p.kp}, {"Lp", 1 << p.lp}, {"mean_abs_gap", m.mean_abs_gap},
                            {"max_a", m.max_a}, {"bound", m.bound}, {"a", m.a}});
            summary["gap_" + tag(N) + "_KpLp" + std::to_string(p.KpLp())] = m.mean_abs_gap;
        }
    }
    rep["alpha"] = alpha;
    rep["ladder"] = rows;
    rep["summary"] = summary;
    return rep;
}

json run_surrogate(const ExperimentConfig& c, std::uint64_t seed, int workers, RunWriter& w, StageTimer& st) {
    json rep, rows = json::array(), summary;
    const double alpha = st.run("alpha", [&] { return fitted_alpha(c); });
    const auto sur_reps = c.threefield.surrogate_replicas > 0 ? c.threefield.surrogate_replicas : 4 * c.replicas;
    auto out = w.open("surrogate.csv");
    out << "N,K,L,Kp,Lp,beta_hat,beta_variation,p_rho,clamped,empty,ks,d_min,d_positive\n";
    for (int N : c.sides) {
        const auto p = tf_params(c, N, c.threefield.ladder.front(), alpha);
        const auto sp = st.run("surrogate " + tag(N), [&] {
            return surrogate_experiment(p, c.replicas, sur_reps, seed, c.threefield.gamma, c.threefield.beta_z, workers);
        });
        out << N << ',' << (1 << p.k) << ',' << (1 << p.l) << ',' << (1 << p.kp) << ',' << (1 << p.lp) << ','
            << sp.beta_hat << ',' << sp.beta.variation << ',' << sp.p_rho << ',' << sp.clamped << ',' << sp.empty << ','
            << sp.ks << ',' << sp.d_min << ',' << sp.d_positive << '\n';
        json betas = json::array();
        for (const auto& b : sp.beta.points)
            betas.push_back({{"z", b.z}, {"beta", b.beta}, {"lo", b.beta_lo}, {"hi", b.beta_hi}, {"used", b.used}});
        rows.push_back({{"N", N}, {"beta_hat", std::isfinite(sp.beta_hat) ? json(sp.beta_hat) : json(nullptr)},
                        {"beta_points", betas}, {"beta_variation", sp.beta.variation}, {"p_rho", sp.p_rho},
                        {"clamped", sp.clamped}, {"ks", sp.ks}, {"d_min", sp.d_min}, {"d_positive", sp.d_positive},
                        {"surrogate_replicas", sp.surrogate_replicas}});
        summary["ks_" + tag(N)] = sp.ks;
    }
    rep["alpha"] = alpha;
    rep["ladder"] = rows;
    rep["summary"] = summary;
    return rep;
}

json run_compare(const ExperimentConfig& c, std::uint64_t seed, RunWriter& w, StageTimer& st) {
    json rep, summary;
    auto out = w.open("verdicts.jsonl");
    std::int64_t slepian_fail = 0, sf_fail = 0, exact_checked = 0, exact_disagree = 0;
    st.run("compare", [&] {
        RngStream rng(seed, 0, Component::Instance);
        const int span = c.compare.n_max - c.compare.n_min + 1;
        for (int i = 0; i < c.compare.instances; ++i) {
            const int n = c.compare.n_min + i % span;
            const auto inst = random_slepian_instance(n, rng);
            const double x = 2.0 * rng.uniform();
            const auto v = slepian_check(inst, x, c.compare.mc_replicas, seed + 2 * static_cast<std::uint64_t>(i));
            slepian_fail += !v.pass;
            out << v.to_json() << '\n';
            if (v.exact && n <= 2) {
                const auto mc = slepian_check(inst, x, c.compare.mc_replicas, seed + 2 * static_cast<std::uint64_t>(i) + 1, false);
                ++exact_checked;
                exact_disagree += std::abs(mc.statistic - v.statistic) > 3.0 * mc.se;
            }
        }
        for (int i = 0; i < c.compare.instances; ++i) {
            const int n = c.compare.n_min + i % span;
            const auto inst = random_sf_instance(n, rng);
            const auto v = sudakov_fernique_check(inst, c.compare.mc_replicas, seed + 1000003 + static_cast<std::uint64_t>(i));
            sf_fail += !v.pass;
            out << v.to_json() << '\n';
        }
    });
    summary = {{"slepian_instances", c.compare.instances}, {"slepian_violations", slepian_fail},
               {"sf_instances", c.compare.instances},      {"sf_violations", sf_fail},
               {"exact_checked", exact_checked},           {"exact_mc_disagreements", exact_disagree}};
    rep["summary"] = summary;
    return rep;
}

json run_perturb(const ExperimentConfig& c, std::uint64_t seed, int workers, RunWriter& w, StageTimer& st) {
    json rep, per = json::array(), summary;
    constexpr std::uint64_t kBaseOffset = std::uint64_t{1} << 40;  // disjoint replica keys for the base field
    for (int N : c.sides) {
        const auto m = make_field_model(c.model, N, c.profile, seed);
        const FieldDraw reference = [&](std::uint64_t r, std::vector<double>& f) { m.draw(r, f, nullptr); };
        const FieldDraw base = [&](std::uint64_t r, std::vector<double>& f) { m.draw(r + kBaseOffset, f, nullptr); };
        std::vector<PerturbationSpec> grid;
        for (int r1 : c.perturb.r1)
            for (int r2 : c.perturb.r2) grid.push_back({c.perturb.s1, c.perturb.s2, r1, r2});
        const auto pts = st.run("perturb " + tag(N), [&] {
            return perturbation_shift_experiment(reference, base, N, grid, c.replicas, seed, workers);
        });
        auto out = w.open("perturb_" + tag(N) + ".csv");
        out << "s1,s2,r1,r2,ks,lp\n";
        json rows = json::array();
        for (const auto& p : pts) {
            out << p.spec.s1 << ',' << p.spec.s2 << ',' << p.spec.r1 << ',' << p.spec.r2 << ',' << p.ks << ',' << p.lp << '\n';
            rows.push_back({{"r1", p.spec.r1}, {"r2", p.spec.r2}, {"ks", p.ks}, {"lp", p.lp}});
            summary["ks_" + tag(N) + "_r" + std::to_string(p.spec.r1) + "_" + std::to_string(p.spec.r2)] = p.ks;
        }
        json e = {{"N", N}, {"shift", rows}};
        if (!c.perturb.epsilons.empty()) {
            const auto tp = st.run("tail perturb " + tag(N), [&] {
                return tail_perturbation_experiment(reference, N, c.perturb.epsilons, c.z_grid, c.replicas, seed, workers);
            });
            auto t = w.open("tail_perturb_" + tag(N) + ".csv");
            t << "epsilon,x,p_perturbed,p_shifted\n";
            json trows = json::array();
            for (const auto& p : tp) {
                for (std::size_t i = 0; i < p.x.size(); ++i)
                    t << p.epsilon << ',' << p.x[i] << ',' << p.p_perturbed[i] << ',' << p.p_shifted[i] << '\n';
                trows.push_back({{"epsilon", p.epsilon}, {"factor", p.factor}});
            }
            e["tail"] = trows;
        }
        per.push_back(e);
    }
    rep["per_N"] = per;
    rep["summary"] = summary;
    return rep;
}

std::vector<std::pair<std::string, std::string>> digest_tree(const fs::path& root) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), root).generic_string();
        if (rel == "manifest.json") continue;
        out.emplace_back(rel, sha256_file(e.path().string()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

fs::path staging_for(const fs::path& final_dir) {
    auto p = final_dir;
    p += ".staging-" + std::to_string(::getpid());
    return p;
}

void commit_dir(const fs::path& staging, const fs::path& final_dir) {
    if (fs::exists(final_dir)) fs::remove_all(final_dir);
    if (final_dir.has_parent_path()) fs::create_directories(final_dir.parent_path());
    fs::rename(staging, final_dir);
}

json run_into(const ExperimentConfig& cfg, const RunOptions& opts, const fs::path& root) {
    const std::uint64_t seed = opts.seed.value_or(cfg.seed);
    json config = cfg.raw;
    config["seed"] = seed;
    RunWriter w(root);
    fs::create_directories(root);
    w.json_file("config.json", config);

    reset_rng_accounting();
    StageTimer st;
    json report;
    const auto& k = cfg.kind;
    if (k == "covtest") report = run_covtest(cfg, seed, opts.workers, w, st);
    else if (k == "extremes") report = run_extremes(cfg, seed, opts.workers, opts.keep_trajectories, w, st, false);
    else if (k == "tail") report = run_extremes(cfg, seed, opts.workers, opts.keep_trajectories, w, st, true);
    else if (k == "cluster") report = run_cluster(cfg, seed, opts.workers, w, st);
    else if (k == "localization") report = run_localization(cfg, seed, opts.workers, opts.keep_trajectories, w, st);
    else if (k == "threefield") report = run_threefield(cfg, w, st);
    else if (k == "surrogate") report = run_surrogate(cfg, seed, opts.workers, w, st);
    else if (k == "compare") report = run_compare(cfg, seed, w, st);
    else report = run_perturb(cfg, seed, opts.workers, w, st);
    report["kind"] = k;
    report["seed"] = seed;
    w.json_file("report.json", report);

    const auto acct = rng_accounting();
    json files = json::array();
    for (const auto& [rel, digest] : digest_tree(root))
        files.push_back({{"path", rel}, {"sha256", digest}, {"bytes", fs::file_size(root / rel)}});
    json manifest = {{"config_hash", sha256_hex(config.dump())},
                     {"version", LCGF_VERSION},
                     {"timestamp", utc_timestamp()},
                     {"kind", k},
                     {"seed", seed},
                     {"workers", opts.workers},
                     {"stages", st.stages},
                     {"rng", {{"streams", acct.streams}, {"draws", acct.draws}}},
                     {"files", files},
                     {"summary", report.value("summary", json::object())}};
    w.json_file("manifest.json", manifest);
    return manifest;
}

// Sets a dotted key ("threefield.alpha") in a config object.
void set_path(json& j, const std::string& key, const json& value) {
    json* cur = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (dot == std::string::npos) {
            (*cur)[part] = value;
            return;
        }
        cur = &(*cur)[part];
        start = dot + 1;
    }
}

std::string csv_cell(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    std::string s = v.dump();
    for (char& ch : s)
        if (ch == ',') ch = ';';
    return s;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    Diagnostics d;
    ExperimentConfig c;
    if (!j.is_object()) throw ConfigError("invalid config\n  <root>: expected an object");
    check_keys(j,
               {"kind", "model", "profile", "N", "replicas", "seed", "z_grid", "r_grid", "gamma_grid", "s_grid", "c",
                "delta", "k_se", "threefield", "perturb", "compare", "output", "sweep"},
               "", d);
    if (!j.contains("kind")) d.add("kind", "required");
    read(j, "kind", c.kind, "", d);
    read(j, "model", c.model, "", d);
    bool constant = false;
    if (j.contains("profile")) c.profile = parse_profile(j.at("profile"), d, constant);
    read_list(j, "N", c.sides, "", d);
    read(j, "replicas", c.replicas, "", d);
    read(j, "seed", c.seed, "", d);
    read_list(j, "z_grid", c.z_grid, "", d);
    read_list(j, "r_grid", c.r_grid, "", d);
    read_list(j, "gamma_grid", c.gamma_grid, "", d);
    read_list(j, "s_grid", c.s_grid, "", d);
    read(j, "c", c.c, "", d);
    read(j, "delta", c.delta, "", d);
    read(j, "k_se", c.k_se, "", d);
    read(j, "output", c.output, "", d);
    if (j.contains("threefield")) {
        const auto& t = j.at("threefield");
        if (!t.is_object()) {
            d.add("threefield", "expected an object");
        } else {
            check_keys(t, {"k", "l", "ladder", "alpha", "surrogate_replicas", "gamma", "beta_z"}, "threefield.", d);
            read(t, "k", c.threefield.k, "threefield.", d);
            read(t, "l", c.threefield.l, "threefield.", d);
            read(t, "ladder", c.threefield.ladder, "threefield.", d);
            if (t.contains("alpha")) {
                if (t.at("alpha").is_number()) c.threefield.alpha = t.at("alpha").get<double>();
                else if (!(t.at("alpha").is_string() && t.at("alpha") == "auto")) d.add("threefield.alpha", "expected a number or \"auto\"");
            }
            read(t, "surrogate_replicas", c.threefield.surrogate_replicas, "threefield.", d);
            read(t, "gamma", c.threefield.gamma, "threefield.", d);
            read_list(t, "beta_z", c.threefield.beta_z, "threefield.", d);
        }
    }
    if (j.contains("perturb")) {
        const auto& t = j.at("perturb");
        if (!t.is_object()) {
            d.add("perturb", "expected an object");
        } else {
            check_keys(t, {"s", "r1", "r2", "epsilons"}, "perturb.", d);
            if (t.contains("s")) {
                try {
                    const auto s = t.at("s").get<std::vector<double>>();
                    if (s.size() != 2) throw ConfigError("");
                    c.perturb.s1 = s[0];
                    c.perturb.s2 = s[1];
                } catch (const std::exception&) {
                    d.add("perturb.s", "expected [s1, s2]");
                }
            }
            read_list(t, "r1", c.perturb.r1, "perturb.", d);
            read_list(t, "r2", c.perturb.r2, "perturb.", d);
            read_list(t, "epsilons", c.perturb.epsilons, "perturb.", d);
        }
    }
    if (j.contains("compare")) {
        const auto& t = j.at("compare");
        if (!t.is_object()) {
            d.add("compare", "expected an object");
        } else {
            check_keys(t, {"instances", "n_min", "n_max", "mc_replicas"}, "compare.", d);
            read(t, "instances", c.compare.instances, "compare.", d);
            read(t, "n_min", c.compare.n_min, "compare.", d);
            read(t, "n_max", c.compare.n_max, "compare.", d);
            read(t, "mc_replicas", c.compare.mc_replicas, "compare.", d);
        }
    }
    if (j.contains("sweep")) c.sweep = j.at("sweep");
    validate(c, constant, d);
    d.raise();
    c.raw = j;
    c.raw.erase("sweep");
    return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config\n  <parse>: ") + e.what());
    }
    return parse_config(j);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

json run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    const fs::path final_dir = opts.out.value_or(cfg.output);
    const auto staging = staging_for(final_dir);
    if (fs::exists(staging)) fs::remove_all(staging);
    try {
        auto manifest = run_into(cfg, opts, staging);
        commit_dir(staging, final_dir);
        return manifest;
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
}

std::vector<json> sweep_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    if (cfg.sweep.is_null()) throw ConfigError("invalid config\n  sweep: required for the sweep command");
    const auto& grid = cfg.sweep.at("grid");
    const std::int64_t cap = cfg.sweep.value("cap", 64);
    std::vector<std::string> keys;
    std::vector<std::vector<json>> values;
    std::int64_t total = 1;
    for (auto it = grid.begin(); it != grid.end(); ++it) {
        keys.push_back(it.key());
        values.emplace_back(it.value().begin(), it.value().end());
        total *= static_cast<std::int64_t>(values.back().size());
    }
    if (keys.empty() || total == 0) throw ConfigError("invalid config\n  sweep.grid: empty grid");
    if (total > cap) {
        throw ConfigError("invalid config\n  sweep.grid: " + std::to_string(total) + " points exceed the cap of " +
                          std::to_string(cap));
    }
    // Validate every point before running any of them.
    const std::uint64_t base = opts.seed.value_or(cfg.seed);
    std::vector<ExperimentConfig> points;
    std::vector<std::vector<json>> chosen;
    for (std::int64_t i = 0; i < total; ++i) {
        json j = cfg.raw;
        std::int64_t rest = i;
        std::vector<json> pick;
        for (std::size_t kx = keys.size(); kx-- > 0;) {
            const auto sz = static_cast<std::int64_t>(values[kx].size());
            pick.insert(pick.begin(), values[kx][static_cast<std::size_t>(rest % sz)]);
            rest /= sz;
        }
        for (std::size_t kx = 0; kx < keys.size(); ++kx) set_path(j, keys[kx], pick[kx]);
        j["seed"] = base ^ static_cast<std::uint64_t>(i);
        try {
            points.push_back(parse_config(j));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + "\n  (sweep point " + std::to_string(i) + ")");
        }
        chosen.push_back(pick);
    }

    const fs::path final_dir = opts.out.value_or(cfg.output);
    const auto staging = staging_for(final_dir);
    if (fs::exists(staging)) fs::remove_all(staging);
    fs::create_directories(staging);
    std::vector<json> manifests;
    try {
        std::set<std::string> metric_keys;
        for (std::int64_t i = 0; i < total; ++i) {
            RunOptions o = opts;
            o.seed.reset();  // the point config carries its own seed
            manifests.push_back(run_into(points[static_cast<std::size_t>(i)], o, staging / ("point_" + std::to_string(i))));
            for (auto it = manifests.back()["summary"].begin(); it != manifests.back()["summary"].end(); ++it)
                metric_keys.insert(it.key());
        }
        RunWriter w(staging);
        auto out = w.open("summary.csv");
        out << "index,seed";
        for (const auto& k : keys) out << ',' << k;
        for (const auto& k : metric_keys) out << ',' << k;
        out << '\n';
        for (std::int64_t i = 0; i < total; ++i) {
            const auto& m = manifests[static_cast<std::size_t>(i)];
            out << i << ',' << m["seed"].get<std::uint64_t>();
            for (const auto& v : chosen[static_cast<std::size_t>(i)]) out << ',' << csv_cell(v);
            for (const auto& k : metric_keys) out << ',' << (m["summary"].contains(k) ? csv_cell(m["summary"][k]) : "");
            out << '\n';
        }
        out.close();
        commit_dir(staging, final_dir);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
    return manifests;
}

json read_manifest(const std::string& path) {
    fs::path p = path;
    if (fs::is_directory(p)) p /= "manifest.json";
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open manifest " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

std::vector<std::string> verify_manifest(const std::string& dir) {
    const auto m = read_manifest(dir);
    std::vector<std::string> bad;
    for (const auto& f : m.at("files")) {
        const auto rel = f.at("path").get<std::string>();
        const auto p = fs::path(dir) / rel;
        if (!fs::exists(p) || sha256_file(p.string()) != f.at("sha256").get<std::string>()) bad.push_back(rel);
    }
    return bad;
}

}  // namespace lcgf
