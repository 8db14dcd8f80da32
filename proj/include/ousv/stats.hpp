#pragma once

#include <cmath>
#include <cstdint>

namespace ousv {

/// Neumaier-compensated accumulator. Merging two accumulators in a fixed
/// order is deterministic, which the block-parallel runner relies on.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) noexcept {
        const double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }

    void merge(const CompensatedSum& other) noexcept {
        add(other.sum);
        add(other.comp);
    }

    double value() const noexcept { return sum + comp; }
};

/// One-pass sample moments (raw power sums, compensated). Provides mean,
/// variance, standard error, skewness and excess-free kurtosis plus the
/// asymptotic standard errors needed for tolerance checks.
class SampleStats {
public:
    void add(double x) noexcept {
        ++n_;
        s1_.add(x);
        const double x2 = x * x;
        s2_.add(x2);
        s3_.add(x2 * x);
        s4_.add(x2 * x2);
    }

    void merge(const SampleStats& other) noexcept {
        n_ += other.n_;
        s1_.merge(other.s1_);
        s2_.merge(other.s2_);
        s3_.merge(other.s3_);
        s4_.merge(other.s4_);
    }

    std::int64_t count() const noexcept { return n_; }

    double mean() const noexcept { return n_ > 0 ? s1_.value() / n_ : 0.0; }

    /// Central moment of order 2..4 about the sample mean.
    double central_moment(int order) const noexcept {
        if (n_ == 0) return 0.0;
        const double m = mean();
        const double r2 = s2_.value() / n_;
        if (order == 2) return r2 - m * m;
        const double r3 = s3_.value() / n_;
        if (order == 3) return r3 - 3.0 * m * r2 + 2.0 * m * m * m;
        const double r4 = s4_.value() / n_;
        return r4 - 4.0 * m * r3 + 6.0 * m * m * r2 - 3.0 * m * m * m * m;
    }

    /// Unbiased sample variance.
    double variance() const noexcept {
        if (n_ < 2) return 0.0;
        return central_moment(2) * static_cast<double>(n_) / (n_ - 1);
    }

    double stddev() const noexcept { return std::sqrt(variance()); }

    /// Standard error of the sample mean.
    double std_error() const noexcept {
        return n_ > 0 ? stddev() / std::sqrt(static_cast<double>(n_)) : 0.0;
    }

    /// Standard error of the sample variance, sqrt((m4 - m2^2)/n).
    double variance_std_error() const noexcept {
        if (n_ < 2) return 0.0;
        const double m2 = central_moment(2);
        const double m4 = central_moment(4);
        const double v = (m4 - m2 * m2) / n_;
        return v > 0.0 ? std::sqrt(v) : 0.0;
    }

    double skewness() const noexcept {
        const double m2 = central_moment(2);
        if (m2 <= 0.0) return 0.0;
        return central_moment(3) / std::pow(m2, 1.5);
    }

    double kurtosis() const noexcept {
        const double m2 = central_moment(2);
        if (m2 <= 0.0) return 0.0;
        return central_moment(4) / (m2 * m2);
    }

private:
    std::int64_t n_ = 0;
    CompensatedSum s1_, s2_, s3_, s4_;
};

} // namespace ousv
