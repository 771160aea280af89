/*
   Copyright 2026 The kmix Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/


#pragma once

#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace kmix {

using Rational = boost::multiprecision::cpp_rational;

// A real number q_0 + sum_j q_j * xi_j with rational q and named irrationals xi_j.
//
// Admissible symbols are "pi", "e" and "sqrt(n)" for squarefree n > 1. Together
// with 1 they are linearly independent over Q as long as at most one
// transcendental symbol occurs; classify_support enforces that.
class ExactReal {
public:
    ExactReal() = default;
    static ExactReal rational(const Rational& q);
    static ExactReal rational(long long p, long long q = 1) { return rational(Rational(p, q)); }
    static ExactReal symbol(const std::string& name, const Rational& q = 1);
    // Parses sums like "pi+1", "3/2", "-2*sqrt(2)+1/3", "pi/2".
    static ExactReal parse(const std::string& text);

    ExactReal operator+(const ExactReal& o) const;
    ExactReal operator-(const ExactReal& o) const;
    ExactReal operator*(const Rational& q) const;

    Rational coefficient(const std::string& name) const;  // "" is the rational part
    const std::vector<std::pair<std::string, Rational>>& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }
    bool is_rational() const;
    double value() const;
    std::string str() const;

    bool operator==(const ExactReal& o) const { return terms_ == o.terms_; }

private:
    void normalize();
    std::vector<std::pair<std::string, Rational>> terms_;  // sorted by name, nonzero
};

struct SupportClass {
    enum class Tag { Aperiodic, PeriodicIrrational, Rational };
    Tag tag = Tag::Aperiodic;
    ExactReal a;     // offset, values[0] reduced into [0, h)
    ExactReal h;     // positive generator of the differences
    ExactReal hbar;  // Rational only: largest positive h' with every value in h' Z

    std::string tag_name() const;
};

// Decides the trichotomy for a finite support with zero coboundary.
SupportClass classify_support(const std::vector<ExactReal>& values);

}  // namespace kmix
