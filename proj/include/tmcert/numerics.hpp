#pragma once

// Small numeric utilities shared by every module: compensated summation,
// shortest round-trip float formatting, bracketed root finding and a
// deterministic RNG for reproducible test vectors.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace tmcert {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double pi_sq() { return kPi * kPi; }

/// Neumaier variant of Kahan summation. Accumulation order is chosen by the
/// caller; with a fixed order the result is bit-reproducible.
class NeumaierSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
    return std::string(buf, ptr);
}

/// Bisection on a bracketing interval [lo, hi] with f(lo) and f(hi) of
/// opposite sign, followed by Newton polishing when a derivative is given.
/// Throws if the bracket is invalid.
inline double find_root_bracketed(const std::function<double(double)>& f,
                                  double lo, double hi,
                                  const std::function<double(double)>& df = nullptr,
                                  int bisect_iters = 80, int newton_iters = 8) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0))
        throw std::invalid_argument("find_root_bracketed: endpoints do not bracket a root");
    double a = lo, b = hi, fa = flo;
    for (int i = 0; i < bisect_iters; ++i) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) { a = b = m; break; }
        if ((fm > 0) == (fa > 0)) { a = m; fa = fm; } else { b = m; }
    }
    double x = 0.5 * (a + b);
    if (df) {
        for (int i = 0; i < newton_iters; ++i) {
            const double fx = f(x), d = df(x);
            if (d == 0.0) break;
            double xn = x - fx / d;
            if (xn <= a || xn >= b) xn = 0.5 * (a + b);  // keep the bracket
            const double fn = f(xn);
            if ((fn > 0) == (fa > 0)) { a = xn; fa = fn; } else { b = xn; }
            x = xn;
            if (std::abs(fn) < 1e-300) break;
        }
    }
    return x;
}

/// xorshift64* generator. Fixed seeds keep property tests reproducible.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed = 0x9E3779B97F4A7C15ull) : s_(seed ? seed : 1) {}
    std::uint64_t next() {
        s_ ^= s_ >> 12;
        s_ ^= s_ << 25;
        s_ ^= s_ >> 27;
        return s_ * 0x2545F4914F6CDD1Dull;
    }
    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    /// Uniform in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

private:
    std::uint64_t s_;
};

}  // namespace tmcert
