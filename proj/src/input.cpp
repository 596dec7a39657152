#include "swmor/input.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace swmor {

Jet Jet::variable(double t0, int order) {
    std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
    c[0] = t0;
    if (order >= 1) c[1] = 1.0;
    return Jet(std::move(c));
}

Jet Jet::constant(double v, int order) {
    std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
    c[0] = v;
    return Jet(std::move(c));
}

double Jet::derivative(int k) const {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return coef(k) * f;
}

Jet operator+(const Jet& a, const Jet& b) {
    std::vector<double> c(a.c_.size());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = a.c_[k] + b.c_[k];
    return Jet(std::move(c));
}

Jet operator*(double s, const Jet& a) {
    std::vector<double> c(a.c_);
    for (double& v : c) v *= s;
    return Jet(std::move(c));
}

Jet operator*(const Jet& a, const Jet& b) {
    std::vector<double> c(a.c_.size(), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k)
        for (std::size_t i = 0; i <= k; ++i) c[k] += a.c_[i] * b.c_[k - i];
    return Jet(std::move(c));
}

Jet exp(const Jet& a) {
    const std::size_t n = a.c_.size();
    std::vector<double> e(n, 0.0);
    e[0] = std::exp(a.c_[0]);
    for (std::size_t k = 1; k < n; ++k) {
        double s = 0.0;
        for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * a.c_[j] * e[k - j];
        e[k] = s / static_cast<double>(k);
    }
    return Jet(std::move(e));
}

namespace {

std::pair<Jet, Jet> sincos(const Jet& a, int order) {
    const std::size_t n = static_cast<std::size_t>(order) + 1;
    std::vector<double> s(n, 0.0), c(n, 0.0);
    s[0] = std::sin(a.coef(0));
    c[0] = std::cos(a.coef(0));
    for (std::size_t k = 1; k < n; ++k) {
        double ss = 0.0, cc = 0.0;
        for (std::size_t j = 1; j <= k; ++j) {
            const double ja = static_cast<double>(j) * a.coef(static_cast<int>(j));
            ss += ja * c[k - j];
            cc += ja * s[k - j];
        }
        s[k] = ss / static_cast<double>(k);
        c[k] = -cc / static_cast<double>(k);
    }
    return {Jet(std::move(s)), Jet(std::move(c))};
}

}  // namespace

Jet sin(const Jet& a) { return sincos(a, a.order()).first; }
Jet cos(const Jet& a) { return sincos(a, a.order()).second; }

InputSignal InputSignal::sine(double a, double b) {
    std::ostringstream os;
    os << "sin:" << a << "," << b;
    return InputSignal(os.str(), [a, b](const Jet& t) {
        return sin(a * t + Jet::constant(b, t.order()));
    });
}

InputSignal InputSignal::exp_chirp() {
    return InputSignal("expchirp", [](const Jet& t) {
        return sin(2.0 * std::numbers::pi * exp(0.125 * t));
    });
}

InputSignal InputSignal::quadratic_chirp() {
    return InputSignal("quadchirp", [](const Jet& t) { return sin(t * t + t); });
}

InputSignal InputSignal::polynomial(std::vector<double> coeffs) {
    std::ostringstream os;
    os << "poly:";
    for (std::size_t i = 0; i < coeffs.size(); ++i) os << (i ? "," : "") << coeffs[i];
    return InputSignal(os.str(), [coeffs](const Jet& t) {
        Jet acc = Jet::constant(0.0, t.order());
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
            acc = acc * t + Jet::constant(*it, t.order());
        return acc;
    });
}

InputSignal InputSignal::zero() {
    return InputSignal("zero", [](const Jet& t) { return Jet::constant(0.0, t.order()); }, true);
}

InputSignal InputSignal::parse(const std::string& spec) {
    auto numbers = [](const std::string& s) {
        std::vector<double> v;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                v.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw InvalidArgument("input", "bad number '" + tok + "'");
            }
        }
        return v;
    };
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const std::string tail = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (head == "sin") {
        if (tail.empty()) return sine();
        const auto v = numbers(tail);
        if (v.size() != 2) throw InvalidArgument("input", "sin:a,b expects two numbers");
        return sine(v[0], v[1]);
    }
    if (head == "expchirp") return exp_chirp();
    if (head == "quadchirp") return quadratic_chirp();
    if (head == "poly") return polynomial(numbers(tail));
    if (head == "zero") return zero();
    throw InvalidArgument("input", "unknown input family '" + spec + "'");
}

std::vector<double> InputSignal::derivatives(double t, int k) const {
    const Jet j = f_(Jet::variable(t, k));
    std::vector<double> d(static_cast<std::size_t>(k) + 1);
    for (int i = 0; i <= k; ++i) d[static_cast<std::size_t>(i)] = j.derivative(i);
    return d;
}

double InputSignal::value(double t) const { return derivatives(t, 0)[0]; }

Vec InputSignal::stacked(double t, int k, Index m) const {
    if (k < 0) return Vec(0);
    Vec u(m * (k + 1));
    const auto d = derivatives(t, k);
    for (int i = 0; i <= k; ++i) u.segment(i * m, m).setConstant(d[static_cast<std::size_t>(i)]);
    return u;
}

}  // namespace swmor
