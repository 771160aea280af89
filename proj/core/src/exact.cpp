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


#include "kmix/exact.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "kmix/error.hpp"

namespace kmix {
namespace {

bool squarefree(long long n) {
    if (n < 2) return false;
    for (long long p = 2; p * p <= n; ++p)
        if (n % (p * p) == 0) return false;
    return true;
}

void check_symbol(const std::string& name) {
    if (name == "pi" || name == "e") return;
    if (name.rfind("sqrt(", 0) == 0 && name.back() == ')') {
        std::string inner = name.substr(5, name.size() - 6);
        if (!inner.empty() && std::all_of(inner.begin(), inner.end(), ::isdigit) &&
            squarefree(std::stoll(inner)))
            return;
    }
    throw DomainError("unsupported exact symbol '" + name + "' (use pi, e or sqrt(n), n squarefree)");
}

double symbol_value(const std::string& name) {
    if (name.empty()) return 1.0;
    if (name == "pi") return std::numbers::pi;
    if (name == "e") return std::numbers::e;
    return std::sqrt(std::stod(name.substr(5, name.size() - 6)));
}

Rational rational_abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

Rational rational_gcd(const Rational& a, const Rational& b) {
    using boost::multiprecision::cpp_int;
    cpp_int na = boost::multiprecision::numerator(rational_abs(a));
    cpp_int da = boost::multiprecision::denominator(rational_abs(a));
    cpp_int nb = boost::multiprecision::numerator(rational_abs(b));
    cpp_int db = boost::multiprecision::denominator(rational_abs(b));
    cpp_int g = boost::multiprecision::gcd(na * db, nb * da);
    return Rational(g, da * db);
}

// floor of a rational
Rational rational_floor(const Rational& q) {
    using boost::multiprecision::cpp_int;
    cpp_int n = boost::multiprecision::numerator(q);
    cpp_int d = boost::multiprecision::denominator(q);
    cpp_int f = n / d;
    if (n < 0 && f * d != n) f -= 1;
    return Rational(f);
}

}  // namespace

ExactReal ExactReal::rational(const Rational& q) {
    ExactReal r;
    if (q != 0) r.terms_.emplace_back("", q);
    return r;
}

ExactReal ExactReal::symbol(const std::string& name, const Rational& q) {
    check_symbol(name);
    ExactReal r;
    if (q != 0) r.terms_.emplace_back(name, q);
    return r;
}

void ExactReal::normalize() {
    std::map<std::string, Rational> acc;
    for (auto& [k, v] : terms_) acc[k] += v;
    terms_.clear();
    for (auto& [k, v] : acc)
        if (v != 0) terms_.emplace_back(k, v);
}

ExactReal ExactReal::operator+(const ExactReal& o) const {
    ExactReal r = *this;
    r.terms_.insert(r.terms_.end(), o.terms_.begin(), o.terms_.end());
    r.normalize();
    return r;
}

ExactReal ExactReal::operator-(const ExactReal& o) const { return *this + o * Rational(-1); }

ExactReal ExactReal::operator*(const Rational& q) const {
    ExactReal r = *this;
    for (auto& t : r.terms_) t.second *= q;
    r.normalize();
    return r;
}

Rational ExactReal::coefficient(const std::string& name) const {
    for (auto& [k, v] : terms_)
        if (k == name) return v;
    return Rational(0);
}

bool ExactReal::is_rational() const {
    return terms_.empty() || (terms_.size() == 1 && terms_[0].first.empty());
}

double ExactReal::value() const {
    long double s = 0;
    for (auto& [k, v] : terms_)
        s += static_cast<long double>(static_cast<double>(v)) * symbol_value(k);
    return static_cast<double>(s);
}

std::string ExactReal::str() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto& [k, v] : terms_) {
        Rational q = v;
        if (!first) os << (q < 0 ? "-" : "+");
        else if (q < 0) os << "-";
        q = rational_abs(q);
        if (k.empty())
            os << q;
        else if (q == 1)
            os << k;
        else
            os << q << "*" << k;
        first = false;
    }
    return os.str();
}

ExactReal ExactReal::parse(const std::string& text) {
    // term := [sign] [rational ['*']] [symbol] ['/' integer]
    ExactReal out;
    std::size_t i = 0;
    auto skip = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    auto read_int = [&]() -> std::string {
        std::size_t s = i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        return text.substr(s, i - s);
    };
    skip();
    if (i == text.size()) throw DomainError("empty exact value");
    while (i < text.size()) {
        skip();
        Rational sign = 1;
        if (text[i] == '+' || text[i] == '-') {
            if (text[i] == '-') sign = -1;
            ++i;
            skip();
        }
        Rational coef = 1;
        bool have_number = false;
        std::string num = read_int();
        if (!num.empty()) {
            have_number = true;
            coef = Rational(boost::multiprecision::cpp_int(num));
            skip();
            if (i < text.size() && text[i] == '/' && i + 1 < text.size() &&
                std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
                ++i;
                coef /= Rational(boost::multiprecision::cpp_int(read_int()));
                skip();
            }
            if (i < text.size() && text[i] == '*') {
                ++i;
                skip();
            }
        }
        std::string sym;
        if (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) {
            std::size_t s = i;
            while (i < text.size() && (std::isalpha(static_cast<unsigned char>(text[i])))) ++i;
            sym = text.substr(s, i - s);
            if (sym == "sqrt") {
                if (i >= text.size() || text[i] != '(') throw DomainError("expected '(' after sqrt");
                std::size_t close = text.find(')', i);
                if (close == std::string::npos) throw DomainError("unbalanced sqrt(");
                sym += text.substr(i, close - i + 1);
                i = close + 1;
            }
            check_symbol(sym);
            skip();
            if (i < text.size() && text[i] == '/') {
                ++i;
                std::string den = read_int();
                if (den.empty()) throw DomainError("expected integer denominator in '" + text + "'");
                coef /= Rational(boost::multiprecision::cpp_int(den));
            }
        } else if (!have_number) {
            throw DomainError("cannot parse exact value '" + text + "'");
        }
        out = out + (sym.empty() ? rational(coef * sign) : symbol(sym, coef * sign));
        skip();
        if (i < text.size() && text[i] != '+' && text[i] != '-')
            throw DomainError("unexpected character in exact value '" + text + "'");
    }
    return out;
}

std::string SupportClass::tag_name() const {
    switch (tag) {
        case Tag::Aperiodic: return "aperiodic";
        case Tag::PeriodicIrrational: return "periodic-irrational";
        case Tag::Rational: return "rational";
    }
    return "?";
}

SupportClass classify_support(const std::vector<ExactReal>& values) {
    if (values.size() < 2) throw DomainError("classify_support needs at least two values");
    int transcendental = 0;
    {
        std::map<std::string, int> seen;
        for (auto& v : values)
            for (auto& t : v.terms())
                if (t.first == "pi" || t.first == "e") seen[t.first] = 1;
        transcendental = static_cast<int>(seen.size());
    }
    if (transcendental > 1)
        throw DomainError("pi and e together: linear independence over Q is not known");

    // differences span a Q-subspace; a single generator exists iff its rank is 1
    std::vector<ExactReal> diffs;
    for (std::size_t i = 1; i < values.size(); ++i) {
        ExactReal d = values[i] - values[0];
        if (!d.is_zero()) diffs.push_back(d);
    }
    if (diffs.empty()) throw DomainError("classify_support needs two distinct values");
    const ExactReal& u = diffs[0];
    const std::string& lead = u.terms()[0].first;
    Rational lead_coef = u.terms()[0].second;
    std::vector<Rational> mult;
    for (auto& d : diffs) {
        Rational q = d.coefficient(lead) / lead_coef;
        if (!(d == u * q)) return SupportClass{};  // rank >= 2: aperiodic
        mult.push_back(q);
    }
    Rational g = mult[0];
    for (auto& q : mult) g = rational_gcd(g, q);
    ExactReal h = u * g;
    if (h.value() < 0) h = h * Rational(-1);

    SupportClass out;
    out.h = h;
    // reduce values[0] into [0, h) by an integer multiple of h
    const std::string& hl = h.terms()[0].first;
    Rational hlc = h.terms()[0].second;
    bool collinear = (values[0] == h * (values[0].coefficient(hl) / hlc));
    double ratio = values[0].value() / h.value();
    Rational m = collinear ? rational_floor(values[0].coefficient(hl) / hlc)
                           : Rational(static_cast<long long>(std::floor(ratio)));
    out.a = values[0] - h * m;
    if (!collinear) {
        out.tag = SupportClass::Tag::PeriodicIrrational;
        return out;
    }
    out.tag = SupportClass::Tag::Rational;
    Rational gb = values[0].coefficient(hl) / hlc;
    for (auto& v : values) gb = rational_gcd(gb, v.coefficient(hl) / hlc);
    out.hbar = h * gb;
    if (out.hbar.value() < 0) out.hbar = out.hbar * Rational(-1);
    return out;
}

}  // namespace kmix
