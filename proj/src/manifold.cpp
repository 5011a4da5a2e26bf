#include "paneitz/manifold.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "paneitz/errors.hpp"
#include "paneitz/simd/kernels.hpp"

namespace paneitz {

namespace {

bool finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

DiscreteManifold::DiscreteManifold(std::vector<double> w, CsrMatrix form, std::vector<double> q,
                                   std::vector<double> k, Geometry geometry)
    : DiscreteManifold(std::move(w), std::make_shared<const CsrMatrix>(std::move(form)),
                       std::move(q), std::move(k),
                       std::make_shared<const Geometry>(std::move(geometry))) {}

DiscreteManifold::DiscreteManifold(std::vector<double> w, std::shared_ptr<const CsrMatrix> form,
                                   std::vector<double> q, std::vector<double> k,
                                   std::shared_ptr<const Geometry> geometry)
    : w_(std::move(w)),
      form_(std::move(form)),
      q_(std::move(q)),
      k_(std::move(k)),
      geometry_(std::move(geometry)) {
    init();
}

void DiscreteManifold::init() {
    const std::size_t n = w_.size();
    if (n == 0) throw ValidationError("manifold has no vertices");
    if (q_.size() != n || k_.size() != n || form_->rows() != n || form_->cols() != n)
        throw ValidationError("manifold arrays have inconsistent sizes");
    if (!finite(w_) || !finite(q_) || !finite(k_) || !form_->all_finite())
        throw ValidationError("manifold contains non-finite entries");
    for (std::size_t i = 0; i < n; ++i) {
        if (w_[i] <= 0.0) {
            std::ostringstream os;
            os << "volume weight w[" << i << "] = " << w_[i] << " is not positive";
            throw ValidationError(os.str());
        }
        if (k_[i] <= 0.0) {
            std::ostringstream os;
            os << "prescription K[" << i << "] = " << k_[i] << " is not positive";
            throw ValidationError(os.str());
        }
    }
    qw_.resize(n);
    kw_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        qw_[i] = q_[i] * w_[i];
        kw_[i] = k_[i] * w_[i];
    }
    kappa_ = std::accumulate(qw_.begin(), qw_.end(), 0.0);
    volume_ = std::accumulate(w_.begin(), w_.end(), 0.0);
}

DiscreteManifold DiscreteManifold::with_prescription(std::vector<double> k) const {
    return DiscreteManifold(w_, form_, q_, std::move(k), geometry_);
}

DiscreteManifold DiscreteManifold::with_metric(std::vector<double> w, std::vector<double> q) const {
    return DiscreteManifold(std::move(w), form_, std::move(q), k_, geometry_);
}

DiscreteManifold DiscreteManifold::with_form(CsrMatrix form) const {
    return DiscreteManifold(w_, std::make_shared<const CsrMatrix>(std::move(form)), q_, k_,
                            geometry_);
}

void DiscreteManifold::check_field(std::span<const double> u, const char* what) const {
    if (u.size() != n()) {
        std::ostringstream os;
        os << what << " has length " << u.size() << ", manifold has " << n() << " vertices";
        throw std::invalid_argument(os.str());
    }
    if (!finite(u)) throw std::invalid_argument(std::string(what) + " has non-finite entries");
}

std::string scope_name(Scope s) {
    switch (s) {
        case Scope::Subcritical: return "subcritical";
        case Scope::Critical: return "critical";
        case Scope::OutOfScope: return "out-of-scope";
    }
    return "unknown";
}

Scope classify_scope(double kappa) {
    if (!(kappa > 0.0)) return Scope::OutOfScope;
    const double rel = (kappa - kCriticalKappa) / kCriticalKappa;
    if (std::abs(rel) <= kCriticalSlack) return Scope::Critical;
    return rel < 0.0 ? Scope::Subcritical : Scope::OutOfScope;
}

namespace {

// Smallest Ritz values of a symmetric operator by Lanczos with full
// reorthogonalization.
std::vector<double> lanczos_smallest(const CsrMatrix& b, std::size_t steps, std::size_t count) {
    const std::size_t n = b.rows();
    steps = std::min(steps, n);
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> g;
    std::vector<std::vector<double>> basis;
    std::vector<double> alpha, beta;
    std::vector<double> q(n), w(n);
    for (auto& x : q) x = g(rng);
    double nrm = std::sqrt(simd::dot(q, q));
    for (auto& x : q) x /= nrm;
    for (std::size_t j = 0; j < steps; ++j) {
        basis.push_back(q);
        b.multiply(q, w);
        alpha.push_back(simd::dot(w, q));
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& v : basis) simd::axpy(-simd::dot(w, v), v, w);
        nrm = std::sqrt(simd::dot(w, w));
        if (nrm < 1e-12) break;
        beta.push_back(nrm);
        for (std::size_t i = 0; i < n; ++i) q[i] = w[i] / nrm;
    }
    const auto m = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    std::vector<double> out;
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(m, static_cast<Eigen::Index>(count)); ++i)
        out.push_back(ev(i));
    return out;
}

}  // namespace

Diagnostics validate(const DiscreteManifold& m, const ValidateOptions& opts) {
    Diagnostics d;
    const auto& b = m.form();
    d.n = m.n();
    d.kappa = m.kappa();
    d.min_w = *std::min_element(m.w().begin(), m.w().end());
    d.min_k = *std::min_element(m.k().begin(), m.k().end());
    d.scope = classify_scope(d.kappa);

    const double scale = std::max(b.max_abs(), 1e-300);
    d.symmetry_defect = b.asymmetry();
    std::vector<double> ones(m.n(), 1.0);
    d.constant_defect = simd::max_abs(b * std::span<const double>(ones));

    if (m.n() <= opts.dense_limit) {
        const auto dense = b.to_dense();
        Eigen::MatrixXd a = Eigen::Map<const Eigen::MatrixXd>(dense.data(), m.n(), m.n());
        a = 0.5 * (a + a.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
        d.lambda_min = es.eigenvalues()(0);
        d.lambda_second = m.n() > 1 ? es.eigenvalues()(1) : es.eigenvalues()(0);
        d.eigen_exact = true;
    } else {
        const auto ev = lanczos_smallest(b, 300, 2);
        d.lambda_min = ev.front();
        d.lambda_second = ev.back();
        d.eigen_exact = false;
    }

    std::ostringstream os;
    if (d.symmetry_defect > opts.symmetry_tol * scale) {
        os << "bilinear form is not symmetric (defect " << d.symmetry_defect << ")";
        throw ValidationError(os.str());
    }
    if (d.constant_defect > opts.symmetry_tol * scale * std::sqrt(static_cast<double>(m.n()))) {
        os << "constants are not in the kernel of the form (|B 1| = " << d.constant_defect << ")";
        throw ValidationError(os.str());
    }
    if (d.lambda_min < -opts.eigen_tol * scale) {
        os << "negative eigenvalue detected: " << d.lambda_min;
        throw ValidationError(os.str());
    }
    if (m.n() > 1 && d.lambda_second <= opts.eigen_tol * scale) {
        os << "kernel of the form is larger than the constants (second eigenvalue "
           << d.lambda_second << ")";
        throw ValidationError(os.str());
    }
    return d;
}

std::vector<double> pencil_eigenvalues(const CsrMatrix& a, std::span<const double> w,
                                       std::size_t count, std::size_t dense_limit) {
    const std::size_t n = a.rows();
    if (w.size() != n) throw std::invalid_argument("pencil_eigenvalues: size mismatch");
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = 1.0 / std::sqrt(w[i]);
    // W^{-1/2} A W^{-1/2}
    const CsrMatrix c = a.row_scaled(s).transpose().row_scaled(s);
    if (n <= dense_limit) {
        const auto dense = c.to_dense();
        Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(dense.data(), n, n);
        m = 0.5 * (m + m.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
        std::vector<double> out;
        for (std::size_t i = 0; i < std::min(count, n); ++i) out.push_back(es.eigenvalues()(i));
        return out;
    }
    return lanczos_smallest(c, 400, count);
}

double q_mean(const DiscreteManifold& m, std::span<const double> u) {
    m.check_field(u);
    if (m.kappa() == 0.0) throw ConstraintError("Q-mean undefined: total Q-curvature is zero");
    return simd::dot(m.qw(), u) / m.kappa();
}

VertexField project_hq(const DiscreteManifold& m, std::span<const double> u) {
    const double c = q_mean(m, u);
    VertexField out(u.begin(), u.end());
    for (auto& v : out) v -= c;
    return out;
}

double inner(const DiscreteManifold& m, std::span<const double> u, std::span<const double> v) {
    m.check_field(u, "u");
    m.check_field(v, "v");
    const auto bv = m.form() * v;
    return simd::dot(u, bv);
}

double log_exp4_sum(std::span<const double> c, std::span<const double> u) {
    const double shift = 4.0 * simd::max(u);
    return std::log(simd::exp_sum(c, u, 4.0, shift)) + shift;
}

VertexField enforce_hq(const DiscreteManifold& m, std::span<const double> u, const Tolerances& tol) {
    const double mean = q_mean(m, u);
    const double scale = 1.0 + simd::max_abs(u);
    if (std::abs(mean) <= tol.constraint * scale) return VertexField(u.begin(), u.end());
    if (tol.strict || std::abs(mean) > tol.drift * scale) {
        std::ostringstream os;
        os << "field is not in H^2_Q: Q-mean " << mean;
        throw ConstraintError(os.str());
    }
    return project_hq(m, u);
}

FunctionalReport eval_J_t(const DiscreteManifold& m, std::span<const double> u, double t) {
    m.check_field(u);
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("t must lie in (0, 1]");
    FunctionalReport r;
    r.t = t;
    r.quadratic_term = inner(m, u, u);
    r.linear_term = 4.0 * t * simd::dot(m.qw(), u);
    r.log_term_u = log_exp4_sum(m.kw(), u);
    r.J_t = r.quadratic_term + r.linear_term - t * m.kappa() * r.log_term_u;
    return r;
}

double J_t(const DiscreteManifold& m, std::span<const double> u, double t) {
    return eval_J_t(m, u, t).J_t;
}

}  // namespace paneitz
