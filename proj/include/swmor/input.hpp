#pragma once

#include "swmor/common.hpp"

#include <functional>
#include <string>
#include <vector>

namespace swmor {

// Truncated Taylor series in t around a point: c[k] = f^{(k)}(t0) / k!.
class Jet {
public:
    explicit Jet(std::vector<double> c) : c_(std::move(c)) {}
    static Jet variable(double t0, int order);
    static Jet constant(double v, int order);

    int order() const { return static_cast<int>(c_.size()) - 1; }
    double coef(int k) const { return c_[static_cast<std::size_t>(k)]; }
    double derivative(int k) const;

    friend Jet operator+(const Jet& a, const Jet& b);
    friend Jet operator*(const Jet& a, const Jet& b);
    friend Jet operator*(double s, const Jet& a);
    friend Jet exp(const Jet& a);
    friend Jet sin(const Jet& a);
    friend Jet cos(const Jet& a);

private:
    std::vector<double> c_;
};

// Scalar input family broadcast to every input channel, with analytic
// derivatives of any order.
class InputSignal {
public:
    using ScalarJet = std::function<Jet(const Jet& t)>;

    InputSignal(std::string name, ScalarJet f, bool is_zero = false)
        : name_(std::move(name)), f_(std::move(f)), zero_(is_zero) {}

    static InputSignal sine(double a = 1.0, double b = 0.0);
    static InputSignal exp_chirp();      // sin(2π e^{t/8})
    static InputSignal quadratic_chirp();  // sin(t² + t)
    static InputSignal polynomial(std::vector<double> coeffs);
    static InputSignal zero();
    // "sin", "sin:a,b", "expchirp", "quadchirp", "poly:c0,c1,...", "zero"
    static InputSignal parse(const std::string& spec);

    const std::string& name() const { return name_; }
    bool is_zero() const { return zero_; }
    // [u; u'; ...; u^{(k)}] for m channels: length m * (k + 1).
    Vec stacked(double t, int k, Index m) const;
    double value(double t) const;
    std::vector<double> derivatives(double t, int k) const;

private:
    std::string name_;
    ScalarJet f_;
    bool zero_ = false;
};

}  // namespace swmor
