#pragma once
// Correlation and paired-test statistics.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace surgflow {

// Regularized incomplete beta I_x(a, b) by the Lentz continued fraction,
// relative error well under 1e-8 for the parameter ranges used here.
double regularized_incomplete_beta(double a, double b, double x);

// Two-tailed p-value of a Student-t statistic with `df` degrees of freedom.
double student_t_two_tailed_p(double t, double df);

// Upper tail of the chi-square distribution with one degree of freedom.
double chi_square_1dof_sf(double x);

enum class UndefinedReason { None, TooFewPairs, ConstantSeries };
std::string_view undefined_reason_name(UndefinedReason reason);

struct PearsonResult {
    double rho = 0.0;
    double p_value = 1.0;  // two-tailed
    std::size_t n = 0;
    UndefinedReason undefined = UndefinedReason::None;

    bool defined() const noexcept { return undefined == UndefinedReason::None; }
};

// Needs n >= 3 and both series non-constant; otherwise the result is undefined.
// Throws Error(LengthMismatch) for unequal lengths.
PearsonResult pearson(std::span<const double> x, std::span<const double> y);

struct McNemarResult {
    std::size_t b = 0;  // a correct, b wrong
    std::size_t c = 0;  // a wrong, b correct
    double chi2 = 0.0;  // continuity corrected
    double p_value = 1.0;
};

McNemarResult mcnemar_from_counts(std::size_t b, std::size_t c);
McNemarResult mcnemar(std::span<const bool> correct_a, std::span<const bool> correct_b);

double mean(std::span<const double> v);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(std::span<const double> v);
// Average of the two middle values for even sizes. Requires non-empty input.
double median(std::span<const double> v);

}  // namespace surgflow
