// abflux: command-line front end for the flux toolkit.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "abflux/abflux.hpp"

using namespace abflux;

namespace {

constexpr const char* kVersion = "1.0.0";

// Flat JSON object with numbers printed through fmt().
class JsonObject {
public:
    JsonObject& num(const std::string& k, double v) { return raw(k, fmt(v)); }
    JsonObject& num(const std::string& k, std::optional<double> v) { return raw(k, v ? fmt(*v) : "null"); }
    JsonObject& integer(const std::string& k, std::optional<long long> v) {
        return raw(k, v ? std::to_string(*v) : "null");
    }
    JsonObject& str(const std::string& k, const std::string& v) { return raw(k, nlohmann::json(v).dump()); }
    JsonObject& raw(const std::string& k, const std::string& v) {
        items_.emplace_back(nlohmann::json(k).dump(), v);
        return *this;
    }
    std::string dump() const {
        std::string s = "{";
        for (size_t i = 0; i < items_.size(); ++i) s += (i ? ", " : "") + items_[i].first + ": " + items_[i].second;
        return s + "}\n";
    }

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

// Writes to stdout for "-" and to a file otherwise.
void emit(const std::string& target, const std::string& text) {
    if (target.empty()) return;
    if (target == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(target, std::ios::binary);
    if (!f) throw UsageError("cannot write " + target);
    f << text;
}

std::string csv(const std::string& header, const std::vector<std::vector<std::string>>& rows) {
    std::string s = header + "\n";
    for (auto& r : rows) {
        for (size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i];
        s += "\n";
    }
    return s;
}

std::string hash_hex(const std::string& text) {
    Fingerprint fp;
    for (char c : text) fp.add(c);
    std::ostringstream ss;
    ss << std::hex << fp.value();
    return ss.str();
}

struct Common {
    std::string out = "-";
    std::string report;
    std::string config;
    std::string manifest;
    int threads = 0;
};

std::vector<Vec2> default_model_probes() {
    return {{std::cos(0.3), std::sin(0.3)}, {std::cos(2.0), std::sin(2.0)}, {std::cos(4.0), std::sin(4.0)},
            {0.5 * std::cos(1.0), 0.5 * std::sin(1.0)}};
}

// Probes around the base pole for lattices with h = 1 and unit pole spacing.
std::vector<Vec2> default_lattice_probes() { return {{-2.5, 1.5}, {2.5, -2.5}, {-2.5, -1.5}, {1.5, 2.5}}; }

PolarFunction standard_data(double beta, int L, double R = 6.0) {
    auto f = PolarFunction::on_grid(R, 128);
    for (int l = -L; l <= L; ++l) {
        double nu = nu_l(beta, l);
        f.set_mode(l, [nu](double r) { return cplx(std::pow(r, nu) * std::exp(-r * r / 2)); });
    }
    return f;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Aharonov-Bohm multi-pole resolvent and wave toolkit"};
    // --h is the lattice spacing, so help is long-form only
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Common com;
    std::map<std::string, std::string> params;

    auto add_common = [&](CLI::App* s, bool needs_config) {
        s->add_option("--out", com.out, "output path or - for stdout");
        s->add_option("--threads", com.threads, "worker cap (default: ABS_THREADS or machine parallelism)");
        s->add_option("--manifest", com.manifest, "write a run manifest (JSON) to this path");
        auto* c = s->add_option("--config", com.config, "pole file with 'x y alpha' lines");
        if (needs_config) c->required();
    };

    // flux-info
    auto* fi = app.add_subcommand("flux-info", "total flux, mu pair, flux class and sheet count");
    add_common(fi, true);

    // bessel
    double nu = 0.0, eps = kDefaultSeriesEps;
    std::string zarg;
    auto* bs = app.add_subcommand("bessel", "J_nu(z) from the power series");
    add_common(bs, false);
    bs->add_option("--nu", nu)->required();
    bs->add_option("--z", zarg, "RE[,IM]")->required();
    bs->add_option("--eps", eps);

    // model-resolvent / r00
    double beta = 0.0, s = 0.0;
    bool have_beta = false;
    std::string probe_r;
    int modes = 48;
    auto* mr = app.add_subcommand("model-resolvent", "R_beta(is) applied to r^nu exp(-r^2/2) on every mode");
    add_common(mr, false);
    mr->add_option("--beta", beta);
    mr->add_option("--s", s)->required();
    mr->add_option("--probe", probe_r, "r1,r2,...")->required();
    mr->add_option("--modes", modes);
    auto* r0 = app.add_subcommand("r00", "zero-energy operator on the same data");
    add_common(r0, false);
    r0->add_option("--beta", beta);
    r0->add_option("--probe", probe_r, "r1,r2,...")->required();
    r0->add_option("--modes", modes);

    // lattice-eig / lattice-resolve
    double h = 1.0, excl = 0.0;
    int n = 64, count = 1;
    auto* le = app.add_subcommand("lattice-eig", "smallest lattice eigenvalue(s)");
    add_common(le, true);
    le->add_option("--h", h);
    le->add_option("--n", n, "half width N");
    le->add_option("--count", count, "number of lowest eigenvalues (dense when > 1)");
    le->add_option("--exclusion", excl, "Dirichlet radius around poles, in units of h");
    std::string rhs_arg, probe_xy;
    double tol = 1e-10;
    auto* lr = app.add_subcommand("lattice-resolve", "(H + s^2)^{-1} applied to a point source");
    add_common(lr, true);
    lr->add_option("--h", h);
    lr->add_option("--n", n);
    lr->add_option("--s", s)->required();
    lr->add_option("--rhs", rhs_arg, "point:x,y")->required();
    lr->add_option("--probe", probe_xy, "x1,y1;x2,y2;...")->required();
    lr->add_option("--tol", tol);
    lr->add_option("--exclusion", excl);

    // fit-exponent
    std::string source = "model", sgrid, probes_arg;
    double chi_radius = 0.0;
    auto* fe = app.add_subcommand("fit-exponent", "sample |G_s - G_ref| and fit power / log laws");
    add_common(fe, false);
    fe->add_option("--source", source)->check(CLI::IsMember({"model", "lattice"}));
    fe->add_option("--beta", beta);
    fe->add_option("--s-grid", sgrid, "a:b:n")->required();
    fe->add_option("--probes", probes_arg, "x1,y1;x2,y2;...");
    fe->add_option("--chi-radius", chi_radius);
    fe->add_option("--h", h);
    fe->add_option("--n", n);
    fe->add_option("--report", com.report, "JSON fit report path or -");

    // vodev-check
    double s_lam = 0.05, s_z = 0.1, chi1 = 0.5;
    std::string solver = "direct";
    VodevParams vp;
    auto* vc = app.add_subcommand("vodev-check", "residual of the resolvent identity on the lattice");
    add_common(vc, true);
    vc->add_option("--s-lambda", s_lam);
    vc->add_option("--s-z", s_z);
    vc->add_option("--chi", chi1);
    vc->add_option("--h", vp.h);
    vc->add_option("--n", vp.N);
    vc->add_option("--solver", solver)->check(CLI::IsMember({"direct", "cg"}));
    vc->add_option("--tol", vp.tol);

    // wave
    std::string engine = "spectral", tgrid;
    double cfl = 0.5;
    auto* wv = app.add_subcommand("wave", "local energy decay of sin(t sqrt P)/sqrt P f");
    add_common(wv, false);
    wv->add_option("--engine", engine)->check(CLI::IsMember({"spectral", "lattice"}));
    wv->add_option("--beta", beta);
    wv->add_option("--t", tgrid, "a:b:n")->required();
    wv->add_option("--h", h);
    wv->add_option("--n", n);
    wv->add_option("--cfl", cfl);
    wv->add_option("--report", com.report, "JSON classification path or -");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (auto& c : msg)
            if (c == '\n') c = ' ';
        std::cerr << "abflux: " << msg << "\n";
        return 2;
    }

    try {
        if (com.threads <= 0)
            if (const char* env = std::getenv("ABS_THREADS")) com.threads = static_cast<int>(parse_double(env));
        set_threads(com.threads);
        CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        for (auto* opt : sub->get_options())
            if (opt->count() > 0 && !opt->get_lnames().empty()) params[opt->get_lnames().front()] = opt->as<std::string>();
        for (const char* b : {"--beta"})
            if (sub->get_option_no_throw(b) && sub->get_option_no_throw(b)->count() > 0) have_beta = true;

        std::optional<Configuration> cfg;
        std::string cfg_text;
        if (!com.config.empty()) {
            cfg_text = read_file(com.config);
            std::istringstream in(cfg_text);
            cfg = Configuration(parse_poles(in));
        }
        auto need_beta = [&]() {
            if (have_beta) return beta;
            if (cfg) return total_flux(*cfg);
            throw UsageError("--beta or --config is required");
        };

        if (name == "flux-info") {
            auto sm = flux_summary(*cfg);
            JsonObject j;
            j.num("beta", sm.beta).num("mu_m", sm.mu_m).num("mu_M", sm.mu_M).str("flux_class", to_string(sm.flux_class));
            j.integer("sheets", sm.sheets ? std::optional<long long>(*sm.sheets) : std::nullopt);
            emit(com.out, j.dump());
        } else if (name == "bessel") {
            auto zv = parse_list(zarg);
            if (zv.empty() || zv.size() > 2) throw UsageError("--z must be RE or RE,IM");
            cplx z(zv[0], zv.size() == 2 ? zv[1] : 0.0);
            cplx v = bessel_j(nu, z, eps);
            emit(com.out, csv("re,im", {{fmt(v.real()), fmt(v.imag())}}));
        } else if (name == "model-resolvent" || name == "r00") {
            const double b = need_beta();
            if (modes < 0) throw UsageError("--modes must be non-negative");
            auto radii = parse_list(probe_r);
            auto f = standard_data(b, modes);
            auto res = name == "r00" ? apply_r00_at(b, f, modes, radii)
                                     : apply_resolvent_at(b, cplx(0, s), f, modes, 1e-12, radii);
            std::vector<std::vector<std::string>> rows;
            for (auto& [l, v] : res)
                for (size_t k = 0; k < radii.size(); ++k)
                    rows.push_back({std::to_string(l), fmt(radii[k]), fmt(v[k].real()), fmt(v[k].imag())});
            emit(com.out, csv("l,r,re,im", rows));
        } else if (name == "lattice-eig") {
            auto L = build(*cfg, h, n, excl);
            std::vector<double> ev = count > 1 ? lowest_eigenvalues(L, count) : std::vector<double>{smallest_eigenvalue(L)};
            std::vector<std::vector<std::string>> rows;
            for (size_t k = 0; k < ev.size(); ++k) rows.push_back({std::to_string(k), fmt(ev[k])});
            emit(com.out, csv("index,eigenvalue", rows));
        } else if (name == "lattice-resolve") {
            if (rhs_arg.rfind("point:", 0) != 0) throw UsageError("--rhs must look like point:x,y");
            Vec2 src = parse_point(rhs_arg.substr(6));
            auto L = build(*cfg, h, n, excl);
            Field rhs(L.sites(), 0.0);
            rhs[L.nearest_site(src + L.shift)] = 1.0 / (h * h);
            auto u = solve_shifted(L, s, rhs, tol);
            std::vector<std::vector<std::string>> rows;
            for (auto& p : parse_points(probe_xy)) {
                cplx v = u[L.nearest_site(p + L.shift)];
                rows.push_back({fmt(p.x), fmt(p.y), fmt(v.real()), fmt(v.imag())});
            }
            emit(com.out, csv("x,y,re,im", rows));
        } else if (name == "fit-exponent") {
            auto grid = parse_grid(sgrid);
            SampleSet set;
            if (source == "model") {
                auto probes = probes_arg.empty() ? default_model_probes() : parse_points(probes_arg);
                double chi = chi_radius > 0 ? chi_radius : 1.0;
                set = sample_curve_model(need_beta(), chi, probes, grid);
            } else {
                if (!cfg) throw UsageError("--config is required for the lattice source");
                auto probes = probes_arg.empty() ? default_lattice_probes() : parse_points(probes_arg);
                double chi = chi_radius > 0 ? chi_radius : 4.0;
                set = sample_curve_lattice(build(*cfg, h, n), chi, probes, grid);
            }
            for (auto& w : set.warnings) std::cerr << "abflux: warning: " << w << "\n";
            // fit before writing anything so a bad window leaves no partial output
            const auto lf = fit_log_model(set.samples, set.s_ref);
            std::vector<std::vector<std::string>> rows;
            for (auto& x : set.samples) rows.push_back({fmt(x.s), fmt(x.value)});
            emit(com.out, csv("s,value", rows));
            std::string rep = com.report.empty() && com.out != "-" ? "-" : com.report;
            if (!rep.empty()) {
                JsonObject j;
                j.num("exponent", lf.power_alt.exponent).num("amplitude", lf.power_alt.amplitude);
                j.num("r2", lf.power_alt.r_squared);
                j.str("model", to_string(lf.log_preferred() ? FitModel::log_inverse : FitModel::power));
                j.num("preference_ratio", lf.preference_ratio);
                emit(rep, j.dump());
            }
        } else if (name == "vodev-check") {
            vp.direct = solver == "direct";
            auto r = vodev_check(*cfg, s_lam, s_z, chi1, vp);
            JsonObject j;
            j.num("residual", r.residual);
            emit(com.out, j.dump());
        } else if (name == "wave") {
            auto ts = parse_grid(tgrid);
            DecaySeries ser;
            if (engine == "spectral") {
                const double b = need_beta();
                const double nv = nu_l(b, 0);
                auto f = PolarFunction::on_grid(9.0, 128);
                f.set_mode(0, [nv](double r) { return cplx(std::pow(r, nv) * std::exp(-r * r / 2)); });
                ser = single_pole_wave(b, f, ts);
            } else {
                if (!cfg) throw UsageError("--config is required for the lattice engine");
                auto L = build(*cfg, h, n);
                Field f1(L.sites(), 0.0);
                const Vec2 c = L.base_pole();
                for (size_t x = 0; x < L.sites(); ++x) {
                    Vec2 d = L.position(x) - c;
                    f1[x] = std::exp(-dot(d, d) / 2);
                }
                double T = 0.0;
                for (double t : ts) T = std::max(T, t);
                auto full = lattice_wave(L, f1, std::ceil(T), cfl, 6.0);
                for (double t : ts) {
                    size_t k = std::min(full.times.size() - 1, static_cast<size_t>(std::lround(std::max(t, 0.0))));
                    ser.times.push_back(full.times[k]);
                    ser.local_norm.push_back(full.local_norm[k]);
                }
                ser.data_norm = full.data_norm;
                ser.config_fingerprint = full.config_fingerprint;
            }
            std::vector<std::vector<std::string>> rows;
            for (size_t k = 0; k < ser.times.size(); ++k) rows.push_back({fmt(ser.times[k]), fmt(ser.local_norm[k])});
            emit(com.out, csv("t,local_norm", rows));
            std::string rep = com.report.empty() && com.out != "-" ? "-" : com.report;
            if (!rep.empty()) {
                auto c = decay_fit(ser, ts.front(), ts.back());
                JsonObject j;
                j.str("regime", to_string(c.regime)).num("exponent", c.fitted_exponent).num("q", c.q);
                j.num("rss_power", c.rss_power).num("rss_log", c.rss_log);
                emit(rep, j.dump());
            }
        }

        if (!com.manifest.empty()) {
            nlohmann::ordered_json m;
            m["subcommand"] = name;
            m["config"] = com.config;
            m["config_hash"] = cfg_text.empty() ? "" : hash_hex(cfg_text);
            m["parameters"] = params;
            m["version"] = kVersion;
            m["outputs"] = {com.out, com.report};
            emit(com.manifest, m.dump(2) + "\n");
        }
        return 0;
    } catch (const InputError& e) {
        std::cerr << "abflux: " << e.what() << "\n";
        return 2;
    } catch (const CLI::Error& e) {
        std::cerr << "abflux: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "abflux: numerical failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "abflux: internal error: " << e.what() << "\n";
        return 1;
    }
}
