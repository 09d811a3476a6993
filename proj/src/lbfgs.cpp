#include <lbbp/lbfgs.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <vector>

namespace lbbp {

const char* to_string(LbfgsStatus status)
{
    switch (status) {
    case LbfgsStatus::GradientConverged: return "gradient_converged";
    case LbfgsStatus::ValueConverged: return "value_converged";
    case LbfgsStatus::MaxIterations: return "max_iterations";
    case LbfgsStatus::LineSearchFailed: return "line_search_failed";
    }
    return "unknown";
}

StepBound lower_bound_step(double floor)
{
    return [floor](const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
        double alpha = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (d[i] < 0.0) alpha = std::min(alpha, (x[i] - floor) / -d[i]);
        }
        return std::max(alpha, 0.0);
    };
}

namespace {

struct Sample
{
    double alpha = 0.0;
    double f = 0.0;
    double df = 0.0;
    Eigen::VectorXd g;
};

double cubic_minimizer(const Sample& a, const Sample& b)
{
    const double d1 = a.df + b.df - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.df * b.df;
    const double mid = 0.5 * (a.alpha + b.alpha);
    if (!(disc >= 0.0) || !std::isfinite(d1)) return mid;
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double denom = b.df - a.df + 2.0 * d2;
    if (denom == 0.0) return mid;
    const double t = b.alpha - (b.alpha - a.alpha) * (b.df + d2 - d1) / denom;
    return std::isfinite(t) ? t : mid;
}

class LineSearch
{
public:
    LineSearch(const VectorObjective& objective, const LbfgsOptions& options, const Eigen::VectorXd& x,
               const Eigen::VectorXd& d, double f0, double df0, int& evaluations)
        : m_objective(objective), m_options(options), m_x(x), m_d(d), m_f0(f0), m_df0(df0), m_evaluations(evaluations)
    {}

    /// Returns the accepted sample, or nothing when no decrease was found.
    std::optional<Sample> run(double alpha, double alpha_max)
    {
        Sample prev{0.0, m_f0, m_df0, {}};
        for (int i = 0; i < m_options.max_line_search; ++i) {
            alpha = std::min(alpha, alpha_max);
            Sample cur = evaluate(alpha);
            if (!armijo(cur) || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur);
            if (std::abs(cur.df) <= -m_options.c2 * m_df0) return cur;
            if (cur.df >= 0.0) return zoom(cur, prev);
            if (alpha >= alpha_max) return cur;
            prev = std::move(cur);
            alpha *= 2.0;
        }
        return best();
    }

private:
    Sample evaluate(double alpha)
    {
        Sample s;
        s.alpha = alpha;
        s.f = m_objective(m_x + alpha * m_d, s.g);
        ++m_evaluations;
        s.df = std::isfinite(s.f) ? s.g.dot(m_d) : std::numeric_limits<double>::quiet_NaN();
        if (std::isfinite(s.f) && s.f < m_f0 && (!m_best || s.f < m_best->f)) m_best = s;
        return s;
    }

    bool armijo(const Sample& s) const
    {
        return std::isfinite(s.f) && s.f <= m_f0 + m_options.c1 * s.alpha * m_df0;
    }

    std::optional<Sample> zoom(Sample lo, Sample hi)
    {
        for (int i = 0; i < m_options.max_line_search; ++i) {
            const double a = std::min(lo.alpha, hi.alpha);
            const double b = std::max(lo.alpha, hi.alpha);
            double alpha = std::isfinite(hi.f) ? cubic_minimizer(lo, hi) : 0.5 * (a + b);
            const double margin = 0.1 * (b - a);
            if (!(alpha >= a + margin && alpha <= b - margin)) alpha = 0.5 * (a + b);
            if (b - a <= 1e-16 * std::max(1.0, b)) break;

            Sample cur = evaluate(alpha);
            if (!armijo(cur) || cur.f >= lo.f) {
                hi = std::move(cur);
                continue;
            }
            if (std::abs(cur.df) <= -m_options.c2 * m_df0) return cur;
            if (cur.df * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
            lo = std::move(cur);
        }
        return best();
    }

    /// Lowest value seen below f0; a weaker fallback than the Wolfe point.
    std::optional<Sample> best() const { return m_best; }

    const VectorObjective& m_objective;
    const LbfgsOptions& m_options;
    const Eigen::VectorXd& m_x;
    const Eigen::VectorXd& m_d;
    double m_f0;
    double m_df0;
    int& m_evaluations;
    std::optional<Sample> m_best;
};

} // namespace

LbfgsResult lbfgs_minimize(
    const VectorObjective& objective,
    Eigen::VectorXd x0,
    const LbfgsOptions& options,
    const StepBound& bound)
{
    LbfgsResult result;
    result.x = std::move(x0);
    result.value = objective(result.x, result.gradient);
    result.evaluations = 1;

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (;;) {
        if (result.gradient.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
            result.status = LbfgsStatus::GradientConverged;
            break;
        }
        if (result.iterations >= options.max_iterations) {
            result.status = LbfgsStatus::MaxIterations;
            break;
        }

        // Two-loop recursion.
        Eigen::VectorXd q = result.gradient;
        std::vector<double> alphas(s_hist.size());
        for (std::size_t i = s_hist.size(); i-- > 0;) {
            alphas[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alphas[i] * y_hist[i];
        }
        if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alphas[i] - beta) * s_hist[i];
        }
        Eigen::VectorXd d = -q;
        double df0 = result.gradient.dot(d);
        if (!(df0 < 0.0)) {
            // Curvature pairs went stale; fall back to steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            d = -result.gradient;
            df0 = -result.gradient.squaredNorm();
        }

        double alpha_max = std::numeric_limits<double>::infinity();
        if (bound) alpha_max = options.boundary_fraction * bound(result.x, d);
        alpha_max = std::min(alpha_max, 1e20);
        double alpha0 = s_hist.empty() ? std::min(1.0, 1.0 / d.lpNorm<Eigen::Infinity>()) : 1.0;
        alpha0 = std::min(alpha0, alpha_max);
        if (!(alpha0 > 0.0)) {
            result.status = LbfgsStatus::LineSearchFailed;
            break;
        }

        LineSearch search(objective, options, result.x, d, result.value, df0, result.evaluations);
        const std::optional<Sample> accepted = search.run(alpha0, alpha_max);
        if (!accepted || !(accepted->f < result.value)) {
            result.status = LbfgsStatus::LineSearchFailed;
            break;
        }

        const Eigen::VectorXd s = accepted->alpha * d;
        const Eigen::VectorXd y = accepted->g - result.gradient;
        const double previous = result.value;
        result.x += s;
        result.value = accepted->f;
        result.gradient = accepted->g;
        ++result.iterations;

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > std::max(1, options.memory)) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        if (std::abs(previous - result.value) <= options.relative_value_tolerance * std::max(1.0, std::abs(result.value))) {
            result.status = LbfgsStatus::ValueConverged;
            break;
        }
    }
    return result;
}

} // namespace lbbp
