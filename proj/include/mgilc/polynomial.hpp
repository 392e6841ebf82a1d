#pragma once

#include <complex>
#include <initializer_list>
#include <vector>

namespace mgilc {

// Real polynomial, coefficients in ascending powers of s.
class Polynomial {
public:
    Polynomial() = default;
    Polynomial(std::initializer_list<double> c) : c_(c) { trim(); }
    explicit Polynomial(std::vector<double> c) : c_(std::move(c)) { trim(); }

    int degree() const { return c_.empty() ? -1 : static_cast<int>(c_.size()) - 1; }
    const std::vector<double>& coefficients() const { return c_; }
    double operator[](std::size_t k) const { return k < c_.size() ? c_[k] : 0.0; }
    std::complex<double> operator()(std::complex<double> s) const;

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(double k, const Polynomial& a);

private:
    void trim();
    std::vector<double> c_;
};

struct Rational {
    Polynomial num, den;

    std::complex<double> operator()(std::complex<double> s) const { return num(s) / den(s); }
    int relative_degree() const { return den.degree() - num.degree(); }
};

Rational operator*(const Rational& a, const Rational& b);
Rational operator-(const Rational& a);

}  // namespace mgilc
