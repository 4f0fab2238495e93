#include "medpipe/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "medpipe/errors.hpp"

namespace medpipe {

KernelSpec KernelSpec::rbf(double gamma) {
    if (!(gamma > 0.0)) throw InvalidArgument("rbf kernel: gamma must be positive");
    KernelSpec s;
    s.kind = KernelKind::rbf;
    s.gamma = gamma;
    return s;
}

KernelSpec KernelSpec::polynomial(int degree, double coef) {
    if (degree < 1) throw InvalidArgument("polynomial kernel: degree must be >= 1");
    KernelSpec s;
    s.kind = KernelKind::polynomial;
    s.degree = degree;
    s.coef = coef;
    return s;
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> z) {
    if (x.size() != z.size())
        throw InvalidArgument("kernel_eval: dimension mismatch");
    switch (spec.kind) {
        case KernelKind::linear:
            return dot(x, z);
        case KernelKind::polynomial:
            return std::pow(dot(x, z) + spec.coef, spec.degree);
        case KernelKind::rbf: {
            double d2 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = x[i] - z[i];
                d2 += d * d;
            }
            return std::exp(-spec.gamma * d2);
        }
    }
    throw InvalidArgument("kernel_eval: unknown kernel kind");
}

std::string kernel_to_string(const KernelSpec& spec) {
    char buf[96];
    switch (spec.kind) {
        case KernelKind::linear:
            return "linear";
        case KernelKind::rbf:
            std::snprintf(buf, sizeof buf, "rbf:%.9g", spec.gamma);
            return buf;
        case KernelKind::polynomial:
            std::snprintf(buf, sizeof buf, "poly:%d:%.9g", spec.degree, spec.coef);
            return buf;
    }
    return "linear";
}

KernelSpec kernel_from_string(const std::string& text) {
    if (text == "linear") return KernelSpec::linear();
    if (text.rfind("rbf:", 0) == 0) {
        try {
            return KernelSpec::rbf(std::stod(text.substr(4)));
        } catch (const std::logic_error&) {
            throw ConfigError("kernel: cannot parse rbf gamma in '" + text + "'");
        }
    }
    if (text.rfind("poly:", 0) == 0) {
        const std::size_t mid = text.find(':', 5);
        if (mid == std::string::npos)
            throw ConfigError("kernel: expected poly:<degree>:<coef> in '" + text + "'");
        try {
            return KernelSpec::polynomial(std::stoi(text.substr(5, mid - 5)),
                                          std::stod(text.substr(mid + 1)));
        } catch (const std::logic_error&) {
            throw ConfigError("kernel: cannot parse poly parameters in '" + text + "'");
        }
    }
    throw ConfigError("kernel: unknown kernel '" + text + "'");
}

namespace {

// Per-point bias estimate b_i = y_i - sum_j a_j y_j K(i, j); for an optimal
// solution every free support vector agrees on it.
struct SmoState {
    const Matrix& x;
    const std::vector<int>& y;
    std::vector<double> alpha;
    std::vector<double> grad;  // (Q a)_i - 1 with Q_ij = y_i y_j K_ij
    Matrix kernel_matrix;

    double bhat(std::size_t i) const { return -y[i] * grad[i]; }
};

double dual_objective(const SmoState& s) {
    // sum(a) - 1/2 a'Qa, using a'Qa = sum_i a_i (g_i + 1).
    double obj = 0.0;
    for (std::size_t i = 0; i < s.alpha.size(); ++i)
        obj += s.alpha[i] * (1.0 - 0.5 * (s.grad[i] + 1.0));
    return obj;
}

}  // namespace

SvmBinaryModel train_binary(const Matrix& x, const std::vector<int>& y,
                            const KernelSpec& kernel, const SmoOptions& opt,
                            std::span<const double> initial_alphas) {
    const std::size_t n = x.rows();
    if (n == 0 || y.size() != n)
        throw InvalidArgument("train_binary: samples and labels must align");
    if (!(opt.C > 0.0)) throw InvalidArgument("train_binary: C must be positive");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else throw InvalidArgument("train_binary: labels must be +1/-1");
    }
    if (!has_pos || !has_neg)
        throw InvalidArgument("train_binary: both label values must be present");
    if (!initial_alphas.empty() && initial_alphas.size() != n)
        throw InvalidArgument("train_binary: warm-start alphas size mismatch");

    SmoState s{x, y, {}, {}, Matrix(n, n)};
    for (std::size_t i = 0; i < n; ++i) {
        s.kernel_matrix(i, i) = kernel_eval(kernel, x.row(i), x.row(i));
        for (std::size_t j = i + 1; j < n; ++j) {
            const double k = kernel_eval(kernel, x.row(i), x.row(j));
            s.kernel_matrix(i, j) = k;
            s.kernel_matrix(j, i) = k;
        }
    }

    const double c_box = opt.C;
    s.alpha.assign(n, 0.0);
    s.grad.assign(n, -1.0);
    if (!initial_alphas.empty()) {
        for (std::size_t i = 0; i < n; ++i)
            s.alpha[i] = std::clamp(initial_alphas[i], 0.0, c_box);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                acc += s.alpha[j] * y[j] * s.kernel_matrix(i, j);
            s.grad[i] = y[i] * acc - 1.0;
        }
    }

    double last_obj = opt.check_monotone ? dual_objective(s) : 0.0;
    double max_violation = 0.0;
    bool converged = false;

    for (std::uint64_t iter = 0; iter <= opt.max_pair_updates; ++iter) {
        // Maximal violating pair over
        //   I_up  = {a_i < C, y_i = +1} u {a_i > 0, y_i = -1}
        //   I_low = {a_i < C, y_i = -1} u {a_i > 0, y_i = +1}
        std::size_t up = n, low = n;
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const bool in_up = (y[i] > 0 && s.alpha[i] < c_box) || (y[i] < 0 && s.alpha[i] > 0.0);
            const bool in_low = (y[i] < 0 && s.alpha[i] < c_box) || (y[i] > 0 && s.alpha[i] > 0.0);
            const double b = s.bhat(i);
            if (in_up && b > m_up) {
                m_up = b;
                up = i;
            }
            if (in_low && b < m_low) {
                m_low = b;
                low = i;
            }
        }
        max_violation = m_up - m_low;
        if (max_violation < opt.tol) {
            converged = true;
            break;
        }
        if (iter == opt.max_pair_updates) break;

        // Ascent step d along (alpha_up += y_up d, alpha_low -= y_low d),
        // which keeps sum a_i y_i constant.
        double eta = s.kernel_matrix(up, up) + s.kernel_matrix(low, low) -
                     2.0 * s.kernel_matrix(up, low);
        if (eta <= 1e-12) eta = 1e-12;
        const double room_up = y[up] > 0 ? c_box - s.alpha[up] : s.alpha[up];
        const double room_low = y[low] > 0 ? s.alpha[low] : c_box - s.alpha[low];
        const double d = std::min({max_violation / eta, room_up, room_low});

        const double new_up = std::clamp(s.alpha[up] + y[up] * d, 0.0, c_box);
        const double new_low = std::clamp(s.alpha[low] - y[low] * d, 0.0, c_box);
        const double delta_up = new_up - s.alpha[up];
        const double delta_low = new_low - s.alpha[low];
        s.alpha[up] = new_up;
        s.alpha[low] = new_low;
        for (std::size_t k = 0; k < n; ++k) {
            s.grad[k] += y[k] * (y[up] * delta_up * s.kernel_matrix(k, up) +
                                 y[low] * delta_low * s.kernel_matrix(k, low));
        }

        if (opt.check_monotone) {
            const double obj = dual_objective(s);
            if (obj + 1e-9 * (1.0 + std::abs(obj)) < last_obj)
                throw Error("train_binary: dual objective decreased");
            last_obj = obj;
        }
    }

    if (!converged)
        throw ConvergenceError("train_binary: pair-update cap exceeded, max KKT violation " +
                                   std::to_string(max_violation),
                               max_violation);

    // Bias: average of per-point estimates over free support vectors, or the
    // midpoint of the feasible interval when none are free.
    double b = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (s.alpha[i] > 0.0 && s.alpha[i] < c_box) {
            b += s.bhat(i);
            ++free_count;
        }
    }
    if (free_count > 0) {
        b /= static_cast<double>(free_count);
    } else {
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const bool in_up = (y[i] > 0 && s.alpha[i] < c_box) || (y[i] < 0 && s.alpha[i] > 0.0);
            const bool in_low = (y[i] < 0 && s.alpha[i] < c_box) || (y[i] > 0 && s.alpha[i] > 0.0);
            if (in_up) m_up = std::max(m_up, s.bhat(i));
            if (in_low) m_low = std::min(m_low, s.bhat(i));
        }
        b = 0.5 * (m_up + m_low);
    }

    SvmBinaryModel model;
    model.kernel = kernel;
    model.C = c_box;
    model.bias = b;
    std::size_t sv_count = 0;
    for (double a : s.alpha)
        if (a > 0.0) ++sv_count;
    model.support_vectors = Matrix(sv_count, x.cols());
    model.alphas.reserve(sv_count);
    model.sv_labels.reserve(sv_count);
    std::size_t r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (s.alpha[i] <= 0.0) continue;
        for (std::size_t c = 0; c < x.cols(); ++c) model.support_vectors(r, c) = x(i, c);
        model.alphas.push_back(s.alpha[i]);
        model.sv_labels.push_back(static_cast<double>(y[i]));
        ++r;
    }
    return model;
}

double decision_value(const SvmBinaryModel& model, std::span<const double> x) {
    if (x.size() != model.support_vectors.cols())
        throw InvalidArgument("decision_value: dimension mismatch");
    double acc = model.bias;
    for (std::size_t i = 0; i < model.alphas.size(); ++i)
        acc += model.alphas[i] * model.sv_labels[i] *
               kernel_eval(model.kernel, model.support_vectors.row(i), x);
    return acc;
}

std::vector<double> linear_weights(const SvmBinaryModel& model) {
    if (model.kernel.kind != KernelKind::linear)
        throw InvalidArgument("linear_weights: model kernel is not linear");
    std::vector<double> w(model.support_vectors.cols(), 0.0);
    for (std::size_t i = 0; i < model.alphas.size(); ++i) {
        const double c = model.alphas[i] * model.sv_labels[i];
        const auto row = model.support_vectors.row(i);
        for (std::size_t j = 0; j < w.size(); ++j) w[j] += c * row[j];
    }
    return w;
}

SvmMulticlassModel train_multiclass(const Matrix& x, const std::vector<int>& labels,
                                    const KernelSpec& kernel, const SmoOptions& opt) {
    if (x.rows() == 0 || labels.size() != x.rows())
        throw InvalidArgument("train_multiclass: samples and labels must align");
    int c = 0;
    for (int l : labels) {
        if (l < 0) throw InvalidArgument("train_multiclass: negative class id");
        c = std::max(c, l + 1);
    }
    if (c < 2) throw InvalidArgument("train_multiclass: need at least 2 classes");

    SvmMulticlassModel model;
    model.dim = x.cols();
    for (int k = 0; k < c; ++k) {
        std::vector<int> y(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == k ? 1 : -1;
        try {
            model.machines.push_back(train_binary(x, y, kernel, opt));
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("class " + std::to_string(k) + " machine: " + e.what(),
                                   e.max_violation);
        }
        model.class_ids.push_back(k);
    }
    return model;
}

int predict_class(const SvmMulticlassModel& model, std::span<const double> x,
                  std::vector<double>* decisions) {
    if (model.machines.empty()) throw InvalidArgument("predict_class: empty model");
    int best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<double> values(model.machines.size());
    for (std::size_t k = 0; k < model.machines.size(); ++k) {
        values[k] = decision_value(model.machines[k], x);
        if (values[k] > best_value) {
            best_value = values[k];
            best = model.class_ids[k];
        }
    }
    if (decisions) *decisions = std::move(values);
    return best;
}

SvmMulticlassModel retrain_incremental(const SvmMulticlassModel& model,
                                       const Matrix& new_x,
                                       const std::vector<int>& new_labels,
                                       const SmoOptions& opt) {
    if (new_x.rows() != new_labels.size())
        throw InvalidArgument("retrain_incremental: samples and labels must align");
    if (new_x.rows() > 0 && new_x.cols() != model.dim)
        throw InvalidArgument("retrain_incremental: dimension mismatch");

    SvmMulticlassModel out;
    out.dim = model.dim;
    out.class_ids = model.class_ids;
    out.class_labels = model.class_labels;
    for (std::size_t k = 0; k < model.machines.size(); ++k) {
        const SvmBinaryModel& old = model.machines[k];
        SmoOptions machine_opt = opt;
        machine_opt.C = old.C;  // warm start is only valid in the original box
        const std::size_t n_old = old.alphas.size();
        const std::size_t n = n_old + new_x.rows();

        Matrix x(n, model.dim);
        std::vector<int> y(n);
        std::vector<double> warm(n, 0.0);
        for (std::size_t i = 0; i < n_old; ++i) {
            for (std::size_t c = 0; c < model.dim; ++c) x(i, c) = old.support_vectors(i, c);
            y[i] = old.sv_labels[i] > 0 ? 1 : -1;
            warm[i] = old.alphas[i];
        }
        for (std::size_t i = 0; i < new_x.rows(); ++i) {
            for (std::size_t c = 0; c < model.dim; ++c) x(n_old + i, c) = new_x(i, c);
            y[n_old + i] = new_labels[i] == model.class_ids[k] ? 1 : -1;
        }
        try {
            out.machines.push_back(train_binary(x, y, old.kernel, machine_opt, warm));
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("class " + std::to_string(model.class_ids[k]) +
                                       " machine: " + e.what(),
                                   e.max_violation);
        }
    }
    return out;
}

}  // namespace medpipe
