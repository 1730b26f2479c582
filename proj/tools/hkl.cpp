// hkl: command-line front end for the heat-kernel laboratory.
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hkl/errors.hpp"
#include "hkl/io.hpp"
#include "hkl/kernel.hpp"
#include "hkl/lattice.hpp"
#include "hkl/perturb.hpp"
#include "hkl/symbols.hpp"

namespace fs = std::filesystem;
using namespace hkl;
using io::fmt;
using io::json;

namespace {

struct Common {
    std::string decomp, lattice_file, perturb_file, out;
    double tmin = 1e-4, tmax = 1e4;
    int points = 17;
    std::vector<unsigned> n_list;
    std::vector<double> xi0, alpha;
    std::uint64_t seed = symbols::kDefaultSeed;
    int quad_nodes = 0;
    double quad_tail = 0.0;
    double mu = 0.0;
    double t = 1.0;
    std::vector<double> xmax;
    std::string name;
};

kernel::QuadratureSpec quad_spec(const Common& c, int dim) {
    kernel::QuadratureSpec q;
    if (c.quad_nodes > 0) q.nodes_per_axis.assign(static_cast<std::size_t>(dim), c.quad_nodes);
    if (c.quad_tail > 0.0) q.tail_tol = c.quad_tail;
    q.check(dim);
    return q;
}

void emit(const Common& c, const std::string& file, const std::string& text) {
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    fs::create_directories(c.out);
    io::write_text_file((fs::path(c.out) / file).string(), text);
    std::cerr << "wrote " << (fs::path(c.out) / file).string() << "\n";
}

symbols::SymbolDecomposition need_decomp(const Common& c) {
    if (c.decomp.empty()) throw InputError("--decomp is required");
    return io::decomposition_from_json(io::read_json_file(c.decomp));
}

lattice::LatticeFunction need_lattice(const Common& c) {
    if (c.lattice_file.empty()) throw InputError("--lattice is required");
    return io::lattice_from_json(io::read_json_file(c.lattice_file));
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

std::string exact_or(const std::optional<Rational>& r, double v) {
    return r ? r->str() : fmt(v);
}

int cmd_validate(const Common& c) {
    auto D = need_decomp(c);
    auto rep = symbols::validate_decomposition(D, {}, c.seed);
    auto ex = symbols::exponents(D);
    std::ostringstream os;
    json items = json::array();
    for (const auto& it : rep.items) {
        os << "[" << symbols::to_string(it.status) << "] " << it.name;
        if (!it.detail.empty()) os << ": " << it.detail;
        os << "\n";
        items.push_back({{"name", it.name}, {"status", symbols::to_string(it.status)}, {"value", it.value}, {"detail", it.detail}});
    }
    os << "contracting_difference: " << (rep.contracting_difference ? "true" : "false") << "\n";
    os << "mu0: " << exact_or(ex.mu0_exact, ex.mu0) << "\n";
    os << "mu_inf: " << exact_or(ex.mu_inf_exact, ex.mu_inf) << "\n";
    os << "overall: " << symbols::to_string(rep.overall()) << "\n";
    std::cout << os.str();
    json j = {{"items", items},
              {"contracting_difference", rep.contracting_difference},
              {"mu0", ex.mu0},
              {"mu_inf", ex.mu_inf},
              {"overall", symbols::to_string(rep.overall())}};
    if (ex.mu0_exact) j["mu0_exact"] = ex.mu0_exact->str();
    if (ex.mu_inf_exact) j["mu_inf_exact"] = ex.mu_inf_exact->str();
    if (!c.out.empty()) emit(c, "validate.json", j.dump(2) + "\n");
    return rep.all_pass() ? 0 : 1;
}

int cmd_phi_curve(const Common& c) {
    auto D = need_decomp(c);
    if (!(c.tmin > 0.0 && c.tmax >= c.tmin) || c.points < 1) throw InputError("need 0 < tmin <= tmax and points >= 1");
    auto rep = symbols::validate_decomposition(D, {}, c.seed);
    if (!rep.all_pass()) throw DomainError("decomposition does not pass validation");
    auto ex = symbols::exponents(D);
    auto q = quad_spec(c, D.d());
    std::ostringstream os;
    os << "t,phi,t_pow_mu0_phi,t_pow_muinf_phi,est_error\n";
    for (int i = 0; i < c.points; ++i) {
        double t = c.tmin;
        if (i == c.points - 1)
            t = c.tmax;
        else if (i > 0)
            t = std::pow(10.0, std::log10(c.tmin) + (std::log10(c.tmax) - std::log10(c.tmin)) * i / (c.points - 1));
        auto e = kernel::phi(D, t, q);
        os << fmt(t) << "," << fmt(e.value) << "," << fmt(std::pow(t, ex.mu0) * e.value) << ","
           << fmt(std::pow(t, ex.mu_inf) * e.value) << "," << fmt(e.est_error) << "\n";
    }
    emit(c, "phi_curve.csv", os.str());
    return 0;
}

int cmd_perturb(const Common& c) {
    auto D = need_decomp(c);
    if (c.perturb_file.empty()) throw InputError("--perturb is required");
    auto P = symbols::assemble_symbol(D);
    auto list = io::perturbations_from_json(io::read_json_file(c.perturb_file), P);
    auto rep = symbols::validate_decomposition(D, {}, c.seed);
    auto q = quad_spec(c, D.d());
    auto ex = symbols::exponents(D);
    bool any_fail = false;
    std::ostringstream summary, constants;
    constants << "name,t,t_pow_muinf_H,est_error\n";
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& [name, R] = list[i];
        auto res = perturb::subhomogeneity_probe(R, D, rep);
        any_fail = any_fail || res.verdict == symbols::ItemStatus::fail;
        std::ostringstream csv;
        csv << "t,s_of_t\n";
        for (std::size_t k = 0; k < res.t.size(); ++k) csv << fmt(res.t[k]) << "," << fmt(res.s[k]) << "\n";
        csv << "# verdict: " << symbols::to_string(res.verdict) << " (" << res.detail << ")\n";
        std::string file = "probe_" + std::to_string(i) + ".csv";
        if (c.out.empty()) {
            std::cout << "# perturbation " << name << "\n" << csv.str();
        } else {
            emit(c, file, csv.str());
        }
        summary << name << ": " << symbols::to_string(res.verdict) << ", " << res.detail;
        if (res.verdict == symbols::ItemStatus::pass) {
            std::ostringstream rows;
            try {
                for (double t : {1e2, 1e3, 1e4}) {
                    auto e = perturb::perturbed_phi(D, R, t, q);
                    rows << csv_field(name) << "," << fmt(t) << "," << fmt(std::pow(t, ex.mu_inf) * e.value) << ","
                         << fmt(std::pow(t, ex.mu_inf) * e.est_error) << "\n";
                }
                constants << rows.str();
            } catch (const DomainError& e) {
                summary << "; large-t constants skipped (" << e.what() << ")";
            }
        }
        summary << "\n";
    }
    std::cerr << summary.str();
    emit(c, "constants.csv", constants.str());
    if (!c.out.empty()) emit(c, "perturb_report.txt", summary.str());
    return any_fail ? 1 : 0;
}

double mu_for(const Common& c) {
    if (c.mu > 0.0) return c.mu;
    if (!c.decomp.empty()) return symbols::exponents(need_decomp(c)).mu_inf;
    throw InputError("--mu or --decomp is required");
}

int cmd_convpow(const Common& c) {
    auto f = need_lattice(c);
    if (c.n_list.empty()) throw InputError("--n is required");
    auto curve = lattice::supnorm_curve(f, c.n_list, mu_for(c));
    std::ostringstream os;
    os << "n,supnorm,scaled\n";
    for (const auto& p : curve) os << p.n << "," << fmt(p.supnorm) << "," << fmt(p.scaled) << "\n";
    emit(c, "convpow.csv", os.str());
    return 0;
}

int cmd_llt(const Common& c) {
    auto f = need_lattice(c);
    lattice::LLTSpec spec{need_decomp(c), c.xi0, c.alpha};
    if (c.mu > 0.0) spec.mu = c.mu;
    if (spec.xi0.empty()) {
        auto m = lattice::max_modulus_search(f);
        if (m.size() != 1) throw DomainError("f-hat has more than one maximizer");
        spec.xi0 = m[0].xi;
        std::cerr << "xi0 from max modulus search:";
        for (double v : spec.xi0) std::cerr << " " << fmt(v);
        std::cerr << "\n";
    }
    if (spec.alpha.empty()) spec.alpha.assign(static_cast<std::size_t>(f.dim()), 0.0);
    if (c.n_list.empty()) throw InputError("--n is required");
    auto q = quad_spec(c, f.dim());
    std::ostringstream report;
    report << "n,sup_residual_scaled,attractor_at_zero_scaled,clipped_mass\n";
    for (unsigned n : c.n_list) {
        auto r = lattice::llt_compare(f, spec, n, q);
        report << n << "," << fmt(r.sup_residual_scaled) << "," << fmt(r.attractor_at_zero_scaled) << ","
               << fmt(r.clipped_mass) << "\n";
        std::ostringstream grid;
        for (int k = 0; k < f.dim(); ++k) grid << "x" << k + 1 << ",";
        grid << "re_phi_n,re_attractor\n";
        std::vector<int> shape;
        for (const auto& a : r.axes) shape.push_back(static_cast<int>(a.size()));
        std::vector<int> idx(shape.size(), 0);
        for (std::size_t i = 0; i < r.lattice_values.size(); ++i) {
            for (std::size_t k = 0; k < idx.size(); ++k) grid << static_cast<long>(r.axes[k][static_cast<std::size_t>(idx[k])]) << ",";
            grid << fmt(r.lattice_values[i].real()) << "," << fmt(r.attractor_values[i].real()) << "\n";
            for (std::size_t k = idx.size(); k-- > 0;) {
                if (++idx[k] < shape[k]) break;
                idx[k] = 0;
            }
        }
        if (!c.out.empty()) emit(c, "llt_n" + std::to_string(n) + ".csv", grid.str());
    }
    emit(c, "llt_report.csv", report.str());
    return 0;
}

int cmd_kernel_grid(const Common& c) {
    auto D = need_decomp(c);
    auto P = symbols::assemble_symbol(D);
    const int d = P.dim();
    if (!(c.t > 0.0)) throw InputError("--t must be positive");
    if (c.points < 1) throw InputError("--points must be positive");
    std::vector<double> xm = c.xmax;
    if (xm.empty()) xm.assign(static_cast<std::size_t>(d), 1.0);
    if (xm.size() == 1) xm.assign(static_cast<std::size_t>(d), xm[0]);
    if (static_cast<int>(xm.size()) != d) throw InputError("--xmax needs one value or one per axis");
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < c.points; ++i)
            axes[static_cast<std::size_t>(k)].push_back(c.points == 1 ? 0.0 : -xm[static_cast<std::size_t>(k)] + 2.0 * xm[static_cast<std::size_t>(k)] * i / (c.points - 1));
    auto g = kernel::kernel_grid(P, c.t, axes, quad_spec(c, d));
    std::ostringstream os;
    for (int k = 0; k < d; ++k) os << "x" << k + 1 << ",";
    os << "re,im\n";
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    for (const auto& v : g.values) {
        for (int k = 0; k < d; ++k) os << fmt(axes[static_cast<std::size_t>(k)][static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])]) << ",";
        os << fmt(v.real()) << "," << fmt(v.imag()) << "\n";
        for (std::size_t k = idx.size(); k-- > 0;) {
            if (++idx[k] < c.points) break;
            idx[k] = 0;
        }
    }
    emit(c, "kernel_grid.csv", os.str());
    return 0;
}

int cmd_builtin(const Common& c) {
    json j;
    if (c.name == "phi")
        j = io::lattice_to_json(lattice::builtin_phi());
    else if (c.name == "psi")
        j = io::lattice_to_json(lattice::builtin_psi());
    else if (c.name == "intro")
        j = io::decomposition_to_json(symbols::builtin_intro());
    else if (c.name == "intro-scaled")
        j = io::decomposition_to_json(symbols::builtin_intro(100));
    else
        throw InputError("unknown builtin '" + c.name + "' (phi, psi, intro, intro-scaled)");
    emit(c, c.name + ".json", j.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heat kernels of inhomogeneous symbols and convolution powers"};
    app.require_subcommand(1);
    Common c;
    auto add_common = [&](CLI::App* s) {
        s->add_option("--out", c.out, "output directory (default: stdout)");
        s->add_option("--seed", c.seed, "sampling seed");
        s->add_option("--quad-nodes", c.quad_nodes, "initial quadrature nodes per axis");
        s->add_option("--quad-tail", c.quad_tail, "quadrature tail tolerance");
    };
    auto* v = app.add_subcommand("validate", "check the structural hypotheses of a decomposition");
    v->add_option("--decomp", c.decomp)->required();
    add_common(v);
    auto* pc = app.add_subcommand("phi-curve", "on-diagonal values on a log grid of t");
    pc->add_option("--decomp", c.decomp)->required();
    pc->add_option("--tmin", c.tmin);
    pc->add_option("--tmax", c.tmax);
    pc->add_option("--points", c.points);
    add_common(pc);
    auto* pt = app.add_subcommand("perturb", "subhomogeneity probes and perturbed large-time constants");
    pt->add_option("--decomp", c.decomp)->required();
    pt->add_option("--perturb", c.perturb_file)->required();
    add_common(pt);
    auto* cp = app.add_subcommand("convpow", "sup-norm curve of convolution powers");
    cp->add_option("--lattice", c.lattice_file)->required();
    cp->add_option("--n", c.n_list)->delimiter(',')->required();
    cp->add_option("--mu", c.mu, "scaling exponent (default: mu_inf of --decomp)");
    cp->add_option("--decomp", c.decomp);
    add_common(cp);
    auto* ll = app.add_subcommand("llt", "local limit comparison against the heat kernel");
    ll->add_option("--lattice", c.lattice_file)->required();
    ll->add_option("--decomp", c.decomp)->required();
    ll->add_option("--n", c.n_list)->delimiter(',')->required();
    ll->add_option("--xi0", c.xi0)->delimiter(',');
    ll->add_option("--alpha", c.alpha)->delimiter(',');
    ll->add_option("--mu", c.mu);
    add_common(ll);
    auto* kg = app.add_subcommand("kernel-grid", "H_P^t on a grid of x");
    kg->add_option("--decomp", c.decomp)->required();
    kg->add_option("--t", c.t);
    kg->add_option("--xmax", c.xmax)->delimiter(',');
    kg->add_option("--points", c.points);
    add_common(kg);
    auto* bi = app.add_subcommand("builtin", "export a builtin dataset as JSON");
    bi->add_option("name", c.name, "phi, psi, intro or intro-scaled")->required();
    add_common(bi);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (*v) return cmd_validate(c);
        if (*pc) return cmd_phi_curve(c);
        if (*pt) return cmd_perturb(c);
        if (*cp) return cmd_convpow(c);
        if (*ll) return cmd_llt(c);
        if (*kg) return cmd_kernel_grid(c);
        if (*bi) return cmd_builtin(c);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const RationalOverflow& e) {
        std::cerr << "rational overflow: " << e.what() << "\n";
        return 3;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 1;
    } catch (const io::json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
