#include "hadamard/system.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "hadamard/errors.hpp"

namespace hadamard {

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

Polynomial::Polynomial(int nvars, std::vector<Monomial> terms) : nvars_(nvars), terms_(std::move(terms)) {
    for (const auto& m : terms_) {
        if (static_cast<int>(m.powers.size()) != nvars_)
            throw ConfigError("monomial has " + std::to_string(m.powers.size()) + " exponents, expected " +
                              std::to_string(nvars_));
        for (int p : m.powers)
            if (p < 0) throw ConfigError("negative exponent in polynomial table");
        if (!std::isfinite(m.coef)) throw ConfigError("non-finite polynomial coefficient");
    }
    canonicalize();
}

Polynomial Polynomial::constant(int nvars, double c) {
    return Polynomial(nvars, {Monomial{c, std::vector<int>(nvars, 0)}});
}

Polynomial Polynomial::linear(int nvars, int i, double c) {
    std::vector<int> p(nvars, 0);
    p[i] = 1;
    return Polynomial(nvars, {Monomial{c, p}});
}

int Polynomial::degree() const {
    int deg = 0;
    for (const auto& m : terms_) {
        int s = 0;
        for (int p : m.powers) s += p;
        deg = std::max(deg, s);
    }
    return deg;
}

double Polynomial::eval(const Vector& u) const {
    double acc = 0.0;
    for (const auto& m : terms_) {
        double v = m.coef;
        for (int i = 0; i < nvars_; ++i)
            for (int k = 0; k < m.powers[i]; ++k) v *= u[i];
        acc += v;
    }
    return acc;
}

Polynomial Polynomial::shifted_increment(const Vector& base) const {
    // prod_i (b_i + w_i)^{p_i} expanded binomially, constant term dropped.
    std::map<std::vector<int>, double> acc;
    for (const auto& m : terms_) {
        std::vector<std::vector<std::pair<int, double>>> factors(nvars_);
        for (int i = 0; i < nvars_; ++i) {
            const int p = m.powers[i];
            for (int k = 0; k <= p; ++k) factors[i].emplace_back(k, binomial(p, k) * std::pow(base[i], p - k));
        }
        std::vector<int> idx(nvars_, 0);
        while (true) {
            std::vector<int> pw(nvars_);
            double c = m.coef;
            for (int i = 0; i < nvars_; ++i) {
                pw[i] = factors[i][idx[i]].first;
                c *= factors[i][idx[i]].second;
            }
            acc[pw] += c;
            int i = 0;
            while (i < nvars_ && ++idx[i] == static_cast<int>(factors[i].size())) idx[i++] = 0;
            if (i == nvars_) break;
        }
    }
    std::vector<Monomial> out;
    for (const auto& [pw, c] : acc) {
        if (std::all_of(pw.begin(), pw.end(), [](int p) { return p == 0; })) continue;
        out.push_back(Monomial{c, pw});
    }
    return Polynomial(nvars_, std::move(out));
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
    if (nvars_ == 0) nvars_ = other.nvars_;
    terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
    canonicalize();
    return *this;
}

void Polynomial::canonicalize() {
    std::map<std::vector<int>, double> acc;
    for (const auto& m : terms_) acc[m.powers] += m.coef;
    terms_.clear();
    for (const auto& [pw, c] : acc)
        if (c != 0.0) terms_.push_back(Monomial{c, pw});
}

Matrix PolynomialSystem::coefficient(int j, const Vector& u) const {
    Matrix m(N, N);
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c) m(r, c) = A[j][r][c].eval(u);
    return m;
}

Vector PolynomialSystem::source(const Vector& u) const {
    Vector f(N);
    for (int r = 0; r < N; ++r) f[r] = F[r].eval(u);
    return f;
}

FirstOrderSystem PolynomialSystem::as_system() const {
    FirstOrderSystem sys;
    sys.N = N;
    sys.d = d;
    sys.name = name;
    auto self = *this;
    sys.coeff = [self](double, const Vector&, const Vector& u) {
        std::vector<Matrix> out;
        out.reserve(self.d);
        for (int j = 0; j < self.d; ++j) out.push_back(self.coefficient(j, u));
        return out;
    };
    sys.source = [self](double, const Vector&, const Vector& u) { return self.source(u); };
    return sys;
}

PolynomialSystem vdw_system() {
    PolynomialSystem s;
    s.N = 2;
    s.d = 1;
    s.name = "vdw";
    s.A.assign(1, std::vector<std::vector<Polynomial>>(2, std::vector<Polynomial>(2, Polynomial(2, {}))));
    s.A[0][0][1] = Polynomial::constant(2, -1.0);
    // -p'(u) = 1 - 3u^2
    s.A[0][1][0] = Polynomial(2, {Monomial{1.0, {0, 0}}, Monomial{-3.0, {2, 0}}});
    s.F.assign(2, Polynomial(2, {}));
    return s;
}

PolynomialSystem complex_burgers_system() {
    PolynomialSystem s;
    s.N = 2;
    s.d = 2;
    s.name = "complex-burgers";
    const auto zero = Polynomial(2, {});
    s.A.assign(2, std::vector<std::vector<Polynomial>>(2, std::vector<Polynomial>(2, zero)));
    // d_x block: -[[u, -v], [v, u]]
    s.A[0][0][0] = Polynomial::linear(2, 0, -1.0);
    s.A[0][0][1] = Polynomial::linear(2, 1, 1.0);
    s.A[0][1][0] = Polynomial::linear(2, 1, -1.0);
    s.A[0][1][1] = Polynomial::linear(2, 0, -1.0);
    // d_y block: -Id
    s.A[1][0][0] = Polynomial::constant(2, -1.0);
    s.A[1][1][1] = Polynomial::constant(2, -1.0);
    s.F.assign(2, zero);
    return s;
}

namespace {

Polynomial poly_from_json(int nvars, const nlohmann::json& j, const std::string& path) {
    if (j.is_number()) return Polynomial::constant(nvars, j.get<double>());
    if (!j.is_array()) throw ConfigError(path + ": polynomial must be a number or a list of [coef, [powers]]");
    std::vector<Monomial> terms;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const auto& t = j[k];
        if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_array())
            throw ConfigError(path + "[" + std::to_string(k) + "]: expected [coef, [powers]]");
        terms.push_back(Monomial{t[0].get<double>(), t[1].get<std::vector<int>>()});
    }
    try {
        return Polynomial(nvars, std::move(terms));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace

PolynomialSystem system_from_json(const nlohmann::json& spec) {
    if (spec.is_string()) {
        const auto name = spec.get<std::string>();
        if (name == "vdw") return vdw_system();
        if (name == "complex-burgers") return complex_burgers_system();
        throw ConfigError("system: unknown built-in '" + name + "'");
    }
    if (!spec.is_object()) throw ConfigError("system: expected a built-in name or a polynomial table");
    PolynomialSystem s;
    s.N = spec.at("N").get<int>();
    s.d = spec.at("d").get<int>();
    s.name = spec.value("name", std::string("custom"));
    if (s.N <= 0 || s.d <= 0) throw ConfigError("system: N and d must be positive");
    const auto& A = spec.at("A");
    if (!A.is_array() || static_cast<int>(A.size()) != s.d) throw ConfigError("system.A: expected d matrices");
    s.A.resize(s.d);
    for (int j = 0; j < s.d; ++j) {
        if (!A[j].is_array() || static_cast<int>(A[j].size()) != s.N)
            throw ConfigError("system.A[" + std::to_string(j) + "]: expected N rows");
        s.A[j].resize(s.N);
        for (int r = 0; r < s.N; ++r) {
            if (!A[j][r].is_array() || static_cast<int>(A[j][r].size()) != s.N)
                throw ConfigError("system.A[" + std::to_string(j) + "][" + std::to_string(r) + "]: expected N entries");
            for (int c = 0; c < s.N; ++c)
                s.A[j][r].push_back(poly_from_json(
                    s.N, A[j][r][c],
                    "system.A[" + std::to_string(j) + "][" + std::to_string(r) + "][" + std::to_string(c) + "]"));
        }
    }
    s.F.assign(s.N, Polynomial(s.N, {}));
    if (spec.contains("F")) {
        const auto& F = spec.at("F");
        if (!F.is_array() || static_cast<int>(F.size()) != s.N) throw ConfigError("system.F: expected N entries");
        for (int r = 0; r < s.N; ++r) s.F[r] = poly_from_json(s.N, F[r], "system.F[" + std::to_string(r) + "]");
    }
    return s;
}

}  // namespace hadamard
