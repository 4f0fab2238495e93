#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "medpipe/linalg.hpp"

namespace medpipe {

enum class KernelKind { linear, polynomial, rbf };

struct KernelSpec {
    KernelKind kind = KernelKind::linear;
    double gamma = 1.0;  // rbf: exp(-gamma * |x - z|^2)
    int degree = 3;      // polynomial: (x.z + coef)^degree
    double coef = 0.0;

    static KernelSpec linear() { return {}; }
    static KernelSpec rbf(double gamma);
    static KernelSpec polynomial(int degree, double coef);
};

double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> z);

std::string kernel_to_string(const KernelSpec& spec);
KernelSpec kernel_from_string(const std::string& text);

struct SmoOptions {
    double C = 10.0;
    double tol = 1e-3;
    std::uint64_t max_pair_updates = 1'000'000;
    std::uint64_t seed = 0;
    bool check_monotone = false;  // verify dual ascent every update (slow)
};

// Soft-margin binary machine: only rows with a_i > 0 are retained.
struct SvmBinaryModel {
    Matrix support_vectors;       // sv_count x dim
    std::vector<double> alphas;   // a_i, 0 < a_i <= C
    std::vector<double> sv_labels;  // +1 / -1
    double bias = 0.0;
    KernelSpec kernel;
    double C = 0.0;
};

// Solves the dual max sum(a) - 1/2 sum a_i a_j y_i y_j K(x_i,x_j) subject to
// sum a_i y_i = 0 and 0 <= a_i <= C, by pairwise coordinate ascent on the
// maximal-KKT-violating pair. Throws ConvergenceError when the pair-update
// cap is exceeded. `initial_alphas`, when nonempty, warm-starts the solve and
// must already satisfy the constraints.
SvmBinaryModel train_binary(const Matrix& x, const std::vector<int>& y,
                            const KernelSpec& kernel, const SmoOptions& opt,
                            std::span<const double> initial_alphas = {});

// sum_i a_i y_i K(sv_i, x) + b
double decision_value(const SvmBinaryModel& model, std::span<const double> x);

// Effective primal weight vector for linear kernels: w = sum a_i y_i sv_i.
std::vector<double> linear_weights(const SvmBinaryModel& model);

struct SvmMulticlassModel {
    std::vector<SvmBinaryModel> machines;  // machine k: class k vs rest
    std::vector<int> class_ids;            // 0..c-1
    std::vector<std::string> class_labels;  // optional display names
    std::size_t dim = 0;
};

SvmMulticlassModel train_multiclass(const Matrix& x, const std::vector<int>& labels,
                                    const KernelSpec& kernel, const SmoOptions& opt);

// Argmax of per-class decision values; ties go to the lower class id.
int predict_class(const SvmMulticlassModel& model, std::span<const double> x,
                  std::vector<double>* decisions = nullptr);

// Warm-start retraining: each machine is re-solved over its retained support
// vectors plus all new samples, starting from the previous alphas.
SvmMulticlassModel retrain_incremental(const SvmMulticlassModel& model,
                                       const Matrix& new_x,
                                       const std::vector<int>& new_labels,
                                       const SmoOptions& opt);

}  // namespace medpipe
