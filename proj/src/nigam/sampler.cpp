#include "nigam/sampler.hpp"

#include "nigam/csv.hpp"
#include "nigam/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <exception>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace nigam::sampler {

using model::LinearGaussianModel;
using model::State;

Rng make_rng(std::uint64_t seed, std::uint64_t chain, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(chain), static_cast<std::uint32_t>(stream), 0x6e6967u};
    return Rng(seq);
}

namespace {

double block_prior_sd(const model::CoefBlock& b, const State& state, Eigen::Index k) {
    return b.scale >= 0 ? state.scales(b.scale) : b.prior_sd(k);
}

} // namespace

namespace {

// X' S^-1 X (full symmetric) and X' S^-1 y for observation variances S.
struct Gram {
    Eigen::MatrixXd xtx;
    Eigen::VectorXd xty;
};

Gram weighted_gram(const LinearGaussianModel& model, const Eigen::VectorXd& var) {
    const Eigen::Index p = model.n_coef();
    Gram g{Eigen::MatrixXd::Zero(p, p), Eigen::VectorXd::Zero(p)};
    double* lower = g.xtx.data();
    const auto& X = model.design;
    for (Eigen::Index i = 0; i < model.n_obs(); ++i) {
        const auto begin = X.outerIndexPtr()[i], end = X.outerIndexPtr()[i + 1];
        const int* cols = X.innerIndexPtr() + begin;
        const double* vals = X.valuePtr() + begin;
        const auto nnz = end - begin;
        const double w = 1.0 / var(i);
        const double wy = w * model.response(i);
        // Row-major inner indices are ascending, so (a, b <= a) lands in the lower triangle.
        for (Eigen::Index a = 0; a < nnz; ++a) {
            const double wa = w * vals[a];
            g.xty(cols[a]) += wy * vals[a];
            double* column = lower + cols[a];
            for (Eigen::Index b = 0; b <= a; ++b) column[static_cast<Eigen::Index>(cols[b]) * p] += wa * vals[b];
        }
    }
    g.xtx.triangularView<Eigen::StrictlyUpper>() = g.xtx.transpose().triangularView<Eigen::StrictlyUpper>();
    return g;
}

struct FactoredConditional {
    ConditionalGaussian cond;
    Eigen::VectorXd jacobi;
    Eigen::LLT<Eigen::MatrixXd> llt;
};

// Jacobi scaling keeps the slope column (ages ~1e3) and the offset column
// on comparable footing before factorising.
void factorize(FactoredConditional& f, const Eigen::VectorXd& rhs) {
    f.jacobi = f.cond.precision.diagonal().cwiseSqrt().cwiseInverse();
    if (!f.jacobi.allFinite()) throw NumericalError("conditional precision is not positive definite");
    f.llt.compute(f.jacobi.asDiagonal() * f.cond.precision * f.jacobi.asDiagonal());
    if (f.llt.info() != Eigen::Success) throw NumericalError("conditional precision is not positive definite");
    f.cond.mean = f.jacobi.asDiagonal() * f.llt.solve(f.jacobi.asDiagonal() * rhs);
}

FactoredConditional factor_conditional(const LinearGaussianModel& model, const State& state,
                                       std::span<const int> blocks) {
    const Eigen::Index p = model.n_coef();
    std::vector<Eigen::Index> pos(static_cast<std::size_t>(p), -1);
    FactoredConditional f;
    ConditionalGaussian& cond = f.cond;
    for (int b : blocks) {
        const auto& blk = model.blocks[static_cast<std::size_t>(b)];
        for (Eigen::Index k = 0; k < blk.size; ++k) {
            pos[static_cast<std::size_t>(blk.offset + k)] = static_cast<Eigen::Index>(cond.columns.size());
            cond.columns.push_back(blk.offset + k);
        }
    }
    const auto q = static_cast<Eigen::Index>(cond.columns.size());
    Eigen::MatrixXd prec = Eigen::MatrixXd::Zero(q, q);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(q);

    const Eigen::VectorXd var = model::observation_variance(model, state);
    std::vector<std::pair<Eigen::Index, double>> row;
    for (Eigen::Index i = 0; i < model.n_obs(); ++i) {
        row.clear();
        double partial = model.response(i);
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(model.design, i); it; ++it) {
            const Eigen::Index c = it.col();
            const Eigen::Index pc = pos[static_cast<std::size_t>(c)];
            if (pc >= 0) row.emplace_back(pc, it.value());
            else partial -= it.value() * state.coef(c);
        }
        const double w = 1.0 / var(i);
        for (std::size_t a = 0; a < row.size(); ++a) {
            const double wa = w * row[a].second;
            rhs(row[a].first) += wa * partial;
            for (std::size_t b = 0; b <= a; ++b) {
                const Eigen::Index ra = std::max(row[a].first, row[b].first);
                const Eigen::Index rb = std::min(row[a].first, row[b].first);
                prec(ra, rb) += wa * row[b].second;
            }
        }
    }
    for (int b : blocks) {
        const auto& blk = model.blocks[static_cast<std::size_t>(b)];
        for (Eigen::Index k = 0; k < blk.size; ++k) {
            const Eigen::Index pc = pos[static_cast<std::size_t>(blk.offset + k)];
            const double sd = block_prior_sd(blk, state, k);
            const double tau = 1.0 / (sd * sd);
            prec(pc, pc) += tau;
            rhs(pc) += tau * blk.prior_mean(k);
        }
    }
    prec.triangularView<Eigen::StrictlyUpper>() = prec.transpose().triangularView<Eigen::StrictlyUpper>();
    cond.precision = std::move(prec);
    factorize(f, rhs);
    return f;
}

// Conditional of every coefficient at once from a precomputed Gram matrix.
FactoredConditional factor_full_conditional(const LinearGaussianModel& model, const State& state, const Gram& gram) {
    FactoredConditional f;
    f.cond.precision = gram.xtx;
    Eigen::VectorXd rhs = gram.xty;
    for (const auto& blk : model.blocks)
        for (Eigen::Index k = 0; k < blk.size; ++k) {
            const double sd = block_prior_sd(blk, state, k);
            const double tau = 1.0 / (sd * sd);
            f.cond.precision(blk.offset + k, blk.offset + k) += tau;
            rhs(blk.offset + k) += tau * blk.prior_mean(k);
        }
    f.cond.columns.resize(static_cast<std::size_t>(model.n_coef()));
    for (Eigen::Index k = 0; k < model.n_coef(); ++k) f.cond.columns[static_cast<std::size_t>(k)] = k;
    factorize(f, rhs);
    return f;
}

void draw_into(const FactoredConditional& f, State& state, Rng& rng) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(f.cond.mean.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = normal(rng);
    const Eigen::VectorXd draw = f.cond.mean + f.jacobi.asDiagonal() * f.llt.matrixU().solve(z);
    for (std::size_t k = 0; k < f.cond.columns.size(); ++k)
        state.coef(f.cond.columns[k]) = draw(static_cast<Eigen::Index>(k));
}

} // namespace

ConditionalGaussian coefficient_conditional(const LinearGaussianModel& model, const State& state,
                                            std::span<const int> blocks) {
    return factor_conditional(model, state, blocks).cond;
}

void gibbs_coefficient_block(const LinearGaussianModel& model, std::span<const int> blocks, State& state, Rng& rng) {
    draw_into(factor_conditional(model, state, blocks), state, rng);
}

namespace {

// Sufficient pieces of the scale-k conditional with the coefficients held fixed.
struct ScaleTerms {
    double coef_ss = 0.0;     // sum of squared deviations under scale k
    Eigen::Index coef_n = 0;  // how many coefficients scale k governs
    bool noise = false;
    Eigen::VectorXd resid_sq; // only for the noise scale
};

ScaleTerms scale_terms(const LinearGaussianModel& model, int k, const State& state) {
    ScaleTerms t;
    for (const auto& b : model.blocks) {
        if (b.scale != k) continue;
        t.coef_ss += (state.coef.segment(b.offset, b.size) - b.prior_mean).squaredNorm();
        t.coef_n += b.size;
    }
    if (k == model.noise_scale) {
        t.noise = true;
        t.resid_sq = (model.response - model.design * state.coef).array().square();
    }
    return t;
}

double scale_terms_log_density(const LinearGaussianModel& model, int k, const ScaleTerms& t, double value) {
    if (!(value > 0.0)) return -std::numeric_limits<double>::infinity();
    double lp = model.scales[static_cast<std::size_t>(k)].prior.log_density(value);
    const double v2 = value * value;
    lp -= t.coef_n * std::log(value) + 0.5 * t.coef_ss / v2;
    if (t.noise) {
        const auto var = model.known_var.array() + v2;
        lp -= 0.5 * (var.log() + t.resid_sq.array() / var).sum();
    }
    return lp;
}

} // namespace

namespace {

// With z = beta - prior mean, G = X' S^-1 X and c = X' S^-1 (y - X m), the
// marginal over z depends on scale v only through the Schur complement A of
// the scaled block and the matching c~:
//   -1/2 log|I + v^2 A| + 1/2 v^2 c~' (I + v^2 A)^-1 c~.
// A = Q T Q' is reduced to tridiagonal form once, so each evaluation is O(n).
struct CollapsedTerms {
    Eigen::VectorXd diag;
    Eigen::VectorXd sub;
    Eigen::VectorXd w; // Q' c~
};

CollapsedTerms collapsed_terms(const LinearGaussianModel& model, int k, const State& state, const Gram& gram) {
    if (k == model.noise_scale) throw std::invalid_argument("collapsed update is for prior scales only");
    const Eigen::Index p = model.n_coef();
    std::vector<Eigen::Index> s_idx, f_idx;
    Eigen::VectorXd prior_mean(p), prior_prec(p);
    for (const auto& b : model.blocks) {
        for (Eigen::Index j = 0; j < b.size; ++j) {
            const double sd = block_prior_sd(b, state, j);
            prior_mean(b.offset + j) = b.prior_mean(j);
            prior_prec(b.offset + j) = 1.0 / (sd * sd);
            (b.scale == k ? s_idx : f_idx).push_back(b.offset + j);
        }
    }
    const Eigen::MatrixXd& G = gram.xtx;
    const Eigen::VectorXd c = gram.xty - G * prior_mean;

    const auto ns = static_cast<Eigen::Index>(s_idx.size());
    const auto nf = static_cast<Eigen::Index>(f_idx.size());
    Eigen::MatrixXd A = G(s_idx, s_idx);
    Eigen::VectorXd ct = c(s_idx);
    if (nf > 0) {
        Eigen::MatrixXd pf = G(f_idx, f_idx);
        pf.diagonal() += prior_prec(f_idx);
        const Eigen::VectorXd jac = pf.diagonal().cwiseSqrt().cwiseInverse();
        Eigen::LLT<Eigen::MatrixXd> llt(jac.asDiagonal() * pf * jac.asDiagonal());
        if (llt.info() != Eigen::Success) throw NumericalError("collapsed scale update: precision not positive definite");
        Eigen::MatrixXd rhs(nf, ns + 1);
        rhs.leftCols(ns) = G(f_idx, s_idx);
        rhs.col(ns) = c(f_idx);
        const Eigen::MatrixXd sol = jac.asDiagonal() * llt.solve(jac.asDiagonal() * rhs);
        A.noalias() -= G(s_idx, f_idx) * sol.leftCols(ns);
        ct.noalias() -= G(s_idx, f_idx) * sol.col(ns);
        A = 0.5 * (A + A.transpose()).eval();
    }
    CollapsedTerms t;
    if (ns == 0) return t;
    Eigen::Tridiagonalization<Eigen::MatrixXd> tri(A);
    t.diag = tri.diagonal();
    t.sub = tri.subDiagonal();
    t.w = tri.matrixQ().transpose() * ct;
    return t;
}

double collapsed_terms_log_density(const LinearGaussianModel& model, int k, const CollapsedTerms& t, double value) {
    if (!(value > 0.0)) return -std::numeric_limits<double>::infinity();
    const double v2 = value * value;
    // LDL' of the tridiagonal I + v^2 T, forward and diagonal solves give
    // log|.| and w' (.)^-1 w.
    const Eigen::Index n = t.diag.size();
    double logdet = 0.0, quad = 0.0, d_prev = 1.0, y_prev = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double d = 1.0 + v2 * t.diag(i);
        double y = t.w(i);
        if (i > 0) {
            const double l = v2 * t.sub(i - 1) / d_prev;
            d -= l * v2 * t.sub(i - 1);
            y -= l * y_prev;
        }
        if (!(d > 0.0)) return -std::numeric_limits<double>::infinity();
        logdet += std::log(d);
        quad += y * y / d;
        d_prev = d;
        y_prev = y;
    }
    return model.scales[static_cast<std::size_t>(k)].prior.log_density(value) - 0.5 * logdet + 0.5 * v2 * quad;
}

} // namespace

namespace {

double collapsed_update_with(const LinearGaussianModel& model, int k, const State& state, const Gram& gram, Rng& rng,
                             const SliceOptions& opt, int* evaluations) {
    const CollapsedTerms t = collapsed_terms(model, k, state, gram);
    auto log_target = [&](double u) { return collapsed_terms_log_density(model, k, t, std::exp(u)) + u; };
    return std::exp(slice_step(std::log(state.scales(k)), log_target, rng, opt, evaluations));
}

} // namespace

double collapsed_scale_log_density(const LinearGaussianModel& model, int k, const State& state, double value) {
    const Gram gram = weighted_gram(model, model::observation_variance(model, state));
    return collapsed_terms_log_density(model, k, collapsed_terms(model, k, state, gram), value);
}

double collapsed_scale_update(const LinearGaussianModel& model, int k, const State& state, Rng& rng,
                              const SliceOptions& opt, int* evaluations) {
    const Gram gram = weighted_gram(model, model::observation_variance(model, state));
    return collapsed_update_with(model, k, state, gram, rng, opt, evaluations);
}

double scale_log_conditional(const LinearGaussianModel& model, int k, const State& state, double value) {
    return scale_terms_log_density(model, k, scale_terms(model, k, state), value);
}

double scale_update(const LinearGaussianModel& model, int k, const State& state, Rng& rng, const SliceOptions& opt,
                    int* evaluations) {
    const ScaleTerms t = scale_terms(model, k, state);
    auto log_target = [&](double u) { return scale_terms_log_density(model, k, t, std::exp(u)) + u; };
    const double u = slice_step(std::log(state.scales(k)), log_target, rng, opt, evaluations);
    return std::exp(u);
}

Eigen::Index PosteriorSamples::n_coef() const {
    Eigen::Index p = 0;
    for (const auto& b : blocks) p += b.size;
    return p;
}

std::optional<BlockLayout> PosteriorSamples::block(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return b;
    return std::nullopt;
}

int PosteriorSamples::scale_index(const std::string& name) const {
    for (std::size_t k = 0; k < scale_names.size(); ++k)
        if (scale_names[k] == name) return static_cast<int>(k);
    return -1;
}

std::vector<std::string> PosteriorSamples::coef_names() const {
    std::vector<std::string> names;
    for (const auto& b : blocks)
        for (Eigen::Index k = 0; k < b.size; ++k) names.push_back(b.name + "[" + std::to_string(k) + "]");
    return names;
}

Eigen::MatrixXd PosteriorSamples::pooled_coef() const {
    Eigen::MatrixXd out(total_draws(), n_coef());
    Eigen::Index r = 0;
    for (const auto& c : chains) {
        out.middleRows(r, c.coef.rows()) = c.coef;
        r += c.coef.rows();
    }
    return out;
}

Eigen::VectorXd PosteriorSamples::pooled_scale(const std::string& name) const {
    const int k = scale_index(name);
    if (k < 0) throw InputError("samples carry no scale '" + name + "'");
    Eigen::VectorXd out(total_draws());
    Eigen::Index r = 0;
    for (const auto& c : chains) {
        out.segment(r, c.scales.rows()) = c.scales.col(k);
        r += c.scales.rows();
    }
    return out;
}

const ParamDiagnostic* Diagnostics::find(const std::string& name) const {
    for (const auto& p : params)
        if (p.name == name) return &p;
    return nullptr;
}

namespace {

struct ChainOutput {
    ChainDraws draws;
    long long slice_evals = 0;
    long long slice_updates = 0;
};

ChainOutput run_one_chain(const LinearGaussianModel& model, const model::McmcConfig& mcmc, int chain) {
    Rng rng = make_rng(mcmc.seed, static_cast<std::uint64_t>(chain), mcmc.stream);
    State state = model::initial_state(model);
    ChainOutput out;
    const int keep = mcmc.retained_per_chain();
    out.draws.coef.resize(keep, model.n_coef());
    out.draws.scales.resize(keep, static_cast<Eigen::Index>(model.scales.size()));

    auto fail = [&](int it, const std::string& what) {
        std::ostringstream msg;
        msg << "non-finite value in " << what << " at iteration " << it << " (chain " << chain << ")";
        throw NumericalError(msg.str());
    };

    // Collapsing is exact only when the coefficient step redraws every
    // coefficient before anything conditions on them again.
    bool collapse = model.update_groups.size() == 1;
    if (collapse) {
        std::size_t covered = 0;
        for (int b : model.update_groups.front()) covered += static_cast<std::size_t>(model.blocks[static_cast<std::size_t>(b)].size);
        collapse = covered == static_cast<std::size_t>(model.n_coef());
    }

    Gram gram;
    auto update_scale = [&](int it, std::size_t k, bool collapsed) {
        int evals = 0;
        const double v = collapsed ? collapsed_update_with(model, static_cast<int>(k), state, gram, rng, {}, &evals)
                                   : scale_update(model, static_cast<int>(k), state, rng, {}, &evals);
        if (!std::isfinite(v) || !(v > 0.0)) fail(it, model.scales[k].name);
        state.scales(static_cast<Eigen::Index>(k)) = v;
        out.slice_evals += evals;
        ++out.slice_updates;
    };

    int kept = 0;
    for (int it = 1; it <= mcmc.iterations; ++it) {
        if (collapse) {
            // The Gram matrix depends only on the noise variance, shared by
            // the collapsed scale updates and the joint coefficient draw.
            gram = weighted_gram(model, model::observation_variance(model, state));
            for (std::size_t k = 0; k < model.scales.size(); ++k)
                if (!model.scales[k].fixed && static_cast<int>(k) != model.noise_scale) update_scale(it, k, true);
        }
        for (const auto& group : model.update_groups) {
            if (collapse) draw_into(factor_full_conditional(model, state, gram), state, rng);
            else gibbs_coefficient_block(model, group, state, rng);
            for (int b : group) {
                const auto& blk = model.blocks[static_cast<std::size_t>(b)];
                if (!state.coef.segment(blk.offset, blk.size).allFinite()) fail(it, blk.name);
            }
        }
        for (std::size_t k = 0; k < model.scales.size(); ++k) {
            if (model.scales[k].fixed) continue;
            if (collapse && static_cast<int>(k) != model.noise_scale) continue;
            update_scale(it, k, false);
        }
        if (it > mcmc.burn_in && (it - mcmc.burn_in) % mcmc.thin == 0 && kept < keep) {
            out.draws.coef.row(kept) = state.coef.transpose();
            out.draws.scales.row(kept) = state.scales.transpose();
            ++kept;
        }
    }
    return out;
}

} // namespace

RunResult run_chains(const LinearGaussianModel& model, const model::McmcConfig& mcmc) {
    mcmc.validate();
    model.validate();

    std::vector<ChainOutput> outputs(static_cast<std::size_t>(mcmc.chains));
    std::vector<std::exception_ptr> errors(outputs.size());
    unsigned workers = mcmc.threads ? mcmc.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(mcmc.chains));

    auto work = [&](std::size_t c) {
        try {
            outputs[c] = run_one_chain(model, mcmc, static_cast<int>(c));
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };
    if (workers <= 1) {
        for (std::size_t c = 0; c < outputs.size(); ++c) work(c);
    } else {
        for (std::size_t start = 0; start < outputs.size(); start += workers) {
            std::vector<std::thread> pool;
            for (std::size_t c = start; c < std::min(outputs.size(), start + workers); ++c) pool.emplace_back(work, c);
            for (auto& t : pool) t.join();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    RunResult result;
    for (const auto& b : model.blocks) result.samples.blocks.push_back({b.name, b.offset, b.size});
    for (const auto& s : model.scales) result.samples.scale_names.push_back(s.name);
    long long evals = 0, updates = 0;
    for (auto& o : outputs) {
        result.samples.chains.push_back(std::move(o.draws));
        evals += o.slice_evals;
        updates += o.slice_updates;
    }
    result.diagnostics = diagnose(result.samples);
    result.diagnostics.slice_evaluations_per_update = updates ? static_cast<double>(evals) / updates : 0.0;
    return result;
}

namespace {

std::vector<Eigen::VectorXd> split_halves(const std::vector<Eigen::VectorXd>& chains) {
    std::vector<Eigen::VectorXd> out;
    for (const auto& c : chains) {
        const Eigen::Index half = c.size() / 2;
        out.push_back(c.head(half));
        out.push_back(c.tail(half));
    }
    return out;
}

struct ChainMoments {
    double w = 0.0;     // mean within-sequence variance
    double var_plus = 0.0;
    double b_over_n = 0.0;
    bool all_constant = true;
};

ChainMoments moments(const std::vector<Eigen::VectorXd>& seqs) {
    const auto m = static_cast<double>(seqs.size());
    const auto n = static_cast<double>(seqs.front().size());
    Eigen::VectorXd means(seqs.size());
    ChainMoments mo;
    for (std::size_t s = 0; s < seqs.size(); ++s) {
        means(static_cast<Eigen::Index>(s)) = seqs[s].mean();
        const double ss = (seqs[s].array() - seqs[s].mean()).square().sum();
        if (ss > 0.0) mo.all_constant = false;
        mo.w += ss / (n - 1.0);
    }
    mo.w /= m;
    mo.b_over_n = m > 1 ? (means.array() - means.mean()).square().sum() / (m - 1.0) : 0.0;
    mo.var_plus = (n - 1.0) / n * mo.w + mo.b_over_n;
    return mo;
}

void check_chains(const std::vector<Eigen::VectorXd>& chains, Eigen::Index min_draws) {
    if (chains.empty()) throw InputError("convergence diagnostics need at least one chain");
    for (const auto& c : chains)
        if (c.size() != chains.front().size() || c.size() < min_draws)
            throw InputError("convergence diagnostics need equally long chains of at least " +
                             std::to_string(min_draws) + " draws");
}

} // namespace

double rhat(const std::vector<Eigen::VectorXd>& chains) {
    check_chains(chains, 4);
    const auto seqs = split_halves(chains);
    const ChainMoments mo = moments(seqs);
    if (mo.w <= 0.0) return mo.b_over_n > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    return std::sqrt(mo.var_plus / mo.w);
}

double effective_sample_size(const std::vector<Eigen::VectorXd>& chains) {
    check_chains(chains, 4);
    const auto m = static_cast<Eigen::Index>(chains.size());
    const Eigen::Index n = chains.front().size();
    const double total = static_cast<double>(m * n);
    const ChainMoments mo = moments(chains);
    if (mo.var_plus <= 0.0 || mo.w <= 0.0) return total;

    std::vector<Eigen::VectorXd> centred;
    for (const auto& c : chains) centred.push_back(c.array() - c.mean());
    auto rho = [&](Eigen::Index lag) {
        double acov = 0.0;
        for (const auto& c : centred) acov += c.head(n - lag).dot(c.tail(n - lag)) / static_cast<double>(n);
        acov /= static_cast<double>(m);
        return 1.0 - (mo.w - acov) / mo.var_plus;
    };

    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (Eigen::Index lag = 0; lag + 1 < n; lag += 2) {
        double pair = rho(lag) + rho(lag + 1);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
    }
    if (tau <= 0.0) return total;
    return std::min(total / tau, total);
}

Diagnostics diagnose(const PosteriorSamples& samples) {
    Diagnostics d;
    if (samples.chains.empty() || samples.draws_per_chain() < 4) return d;
    std::vector<Eigen::VectorXd> per_chain(samples.chains.size());
    auto add = [&](const std::string& name, auto column_of) {
        for (std::size_t c = 0; c < samples.chains.size(); ++c) per_chain[c] = column_of(samples.chains[c]);
        d.params.push_back({name, rhat(per_chain), effective_sample_size(per_chain)});
    };
    const auto names = samples.coef_names();
    for (std::size_t k = 0; k < names.size(); ++k)
        add(names[k], [&](const ChainDraws& c) -> Eigen::VectorXd { return c.coef.col(static_cast<Eigen::Index>(k)); });
    for (std::size_t k = 0; k < samples.scale_names.size(); ++k)
        add(samples.scale_names[k],
            [&](const ChainDraws& c) -> Eigen::VectorXd { return c.scales.col(static_cast<Eigen::Index>(k)); });
    return d;
}

void write_samples_csv(const PosteriorSamples& samples, std::ostream& out) {
    out << "chain,draw,parameter,value\n";
    const auto names = samples.coef_names();
    for (std::size_t c = 0; c < samples.chains.size(); ++c) {
        const auto& ch = samples.chains[c];
        for (Eigen::Index r = 0; r < ch.coef.rows(); ++r) {
            const std::string prefix = std::to_string(c) + "," + std::to_string(r) + ",";
            for (std::size_t k = 0; k < names.size(); ++k)
                out << prefix << names[k] << ',' << csv::format_double(ch.coef(r, static_cast<Eigen::Index>(k)))
                    << '\n';
            for (std::size_t k = 0; k < samples.scale_names.size(); ++k)
                out << prefix << samples.scale_names[k] << ','
                    << csv::format_double(ch.scales(r, static_cast<Eigen::Index>(k))) << '\n';
        }
    }
}

PosteriorSamples read_samples_csv(const std::string& path) {
    const auto t = csv::Table::read_file(path);
    const auto c_chain = t.require_column("chain");
    const auto c_draw = t.require_column("draw");
    const auto c_param = t.require_column("parameter");
    const auto c_value = t.require_column("value");

    PosteriorSamples s;
    std::map<std::string, std::pair<bool, Eigen::Index>> column; // name -> (is_scale, index)
    std::vector<std::string> order;
    long long n_chains = 0, n_draws = 0;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        n_chains = std::max(n_chains, t.integer(r, c_chain) + 1);
        n_draws = std::max(n_draws, t.integer(r, c_draw) + 1);
        const std::string& name = t.cell(r, c_param);
        if (column.count(name)) continue;
        const auto br = name.find('[');
        if (br == std::string::npos) {
            column[name] = {true, static_cast<Eigen::Index>(s.scale_names.size())};
            s.scale_names.push_back(name);
        } else {
            const std::string base = name.substr(0, br);
            if (s.blocks.empty() || s.blocks.back().name != base) {
                if (s.block(base)) throw InputError(path + ": block '" + base + "' is not contiguous");
                s.blocks.push_back({base, s.n_coef(), 0});
            }
            column[name] = {false, s.blocks.back().offset + s.blocks.back().size};
            ++s.blocks.back().size;
        }
    }
    s.chains.resize(static_cast<std::size_t>(n_chains));
    for (auto& ch : s.chains) {
        ch.coef = Eigen::MatrixXd::Constant(n_draws, s.n_coef(), std::numeric_limits<double>::quiet_NaN());
        ch.scales = Eigen::MatrixXd::Constant(n_draws, static_cast<Eigen::Index>(s.scale_names.size()),
                                              std::numeric_limits<double>::quiet_NaN());
    }
    for (std::size_t r = 0; r < t.rows(); ++r) {
        auto& ch = s.chains[static_cast<std::size_t>(t.integer(r, c_chain))];
        const auto draw = static_cast<Eigen::Index>(t.integer(r, c_draw));
        const auto [is_scale, idx] = column[t.cell(r, c_param)];
        (is_scale ? ch.scales : ch.coef)(draw, idx) = t.number(r, c_value);
    }
    for (const auto& ch : s.chains)
        if (!ch.coef.allFinite() || !ch.scales.allFinite()) throw InputError(path + ": incomplete sample table");
    return s;
}

void write_diagnostics_csv(const Diagnostics& diagnostics, std::ostream& out) {
    out << "parameter,rhat,ess\n";
    for (const auto& p : diagnostics.params)
        out << p.name << ',' << csv::format_double(p.rhat) << ',' << csv::format_double(p.ess) << '\n';
}

} // namespace nigam::sampler
