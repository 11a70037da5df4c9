#include "drlogit/basis.hpp"
#include "drlogit/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace drlogit {

namespace {

int parse_coordinate(const std::string& text, const std::string& whole) {
    if (text.size() < 2 || text[0] != 'x') {
        throw std::invalid_argument("basis term '" + whole + "': expected a coordinate like x1");
    }
    const std::string digits = text.substr(1);
    if (!std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) {
        throw std::invalid_argument("basis term '" + whole + "': bad coordinate '" + text + "'");
    }
    const int j = std::stoi(digits);
    if (j < 1) {
        throw std::invalid_argument("basis term '" + whole + "': coordinates start at x1");
    }
    return j - 1;
}

std::string strip(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- Dataset

void Dataset::validate() const {
    if (n() < 1) throw std::invalid_argument("dataset has no observations");
    if (z.rows() != n() || x.rows() != n()) {
        throw std::invalid_argument("dataset: y, z and x must have the same number of rows");
    }
    for (Eigen::Index i = 0; i < n(); ++i) {
        if (y(i) != 0 && y(i) != 1) {
            throw std::invalid_argument("dataset: y must be 0 or 1 (row " + std::to_string(i) + ")");
        }
    }
    if (!z.allFinite() || !x.allFinite()) throw std::invalid_argument("dataset: non-finite covariate");
}

Eigen::Index Dataset::count(int response) const {
    return (y.array() == response).count();
}

std::string_view to_string(Family family) {
    return family == Family::Gaussian ? "gaussian" : "bernoulli";
}

Family parse_family(std::string_view name) {
    if (name == "gaussian") return Family::Gaussian;
    if (name == "bernoulli") return Family::Bernoulli;
    throw std::invalid_argument("unknown family '" + std::string(name) + "' (gaussian|bernoulli)");
}

std::string_view to_string(PhiVariant variant) {
    switch (variant) {
        case PhiVariant::Identity: return "identity";
        case PhiVariant::Simple: return "simple";
        case PhiVariant::Optimal: return "optimal";
    }
    return "?";
}

PhiVariant parse_phi_variant(std::string_view name) {
    if (name == "identity") return PhiVariant::Identity;
    if (name == "simple") return PhiVariant::Simple;
    if (name == "optimal") return PhiVariant::Optimal;
    throw std::invalid_argument("unknown phi variant '" + std::string(name) +
                                "' (identity|simple|optimal)");
}

void PhiSpec::validate() const {
    if (quadrature_order < 5 || quadrature_order % 2 == 0) {
        throw std::invalid_argument("quadrature order must be odd and >= 5");
    }
}

Eigen::VectorXd CovariateModelParams::mean(const Eigen::VectorXd& bx) const {
    Eigen::VectorXd lin = gamma * bx;
    for (Eigen::Index j = 0; j < p(); ++j) {
        if (families[static_cast<size_t>(j)] == Family::Bernoulli) {
            lin(j) = 1.0 / (1.0 + std::exp(-lin(j)));
        }
    }
    return lin;
}

Eigen::VectorXd CovariateModelParams::mean_slope(const Eigen::VectorXd& bx) const {
    Eigen::VectorXd out = Eigen::VectorXd::Ones(p());
    for (Eigen::Index j = 0; j < p(); ++j) {
        if (families[static_cast<size_t>(j)] == Family::Bernoulli) {
            const double f = 1.0 / (1.0 + std::exp(-gamma.row(j).dot(bx)));
            out(j) = f * (1.0 - f);
        }
    }
    return out;
}

// ---------------------------------------------------------------- Basis

double BasisTerm::eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    switch (kind) {
        case Kind::Intercept: return 1.0;
        case Kind::Linear: return x(j);
        case Kind::Square: return x(j) * x(j);
        case Kind::Product: return x(j) * x(k);
    }
    return 0.0;
}

std::string BasisTerm::to_string() const {
    const auto c = [](int i) { return "x" + std::to_string(i + 1); };
    switch (kind) {
        case Kind::Intercept: return "1";
        case Kind::Linear: return c(j);
        case Kind::Square: return c(j) + "^2";
        case Kind::Product: return c(j) + "*" + c(k);
    }
    return "?";
}

BasisTerm BasisTerm::parse(const std::string& raw) {
    const std::string text = strip(raw);
    if (text == "1") return {};
    if (const auto star = text.find('*'); star != std::string::npos) {
        const int j = parse_coordinate(text.substr(0, star), raw);
        const int k = parse_coordinate(text.substr(star + 1), raw);
        if (j == k) return {Kind::Square, j, -1};
        return {Kind::Product, std::min(j, k), std::max(j, k)};
    }
    if (text.size() > 2 && text.substr(text.size() - 2) == "^2") {
        return {Kind::Square, parse_coordinate(text.substr(0, text.size() - 2), raw), -1};
    }
    return {Kind::Linear, parse_coordinate(text, raw), -1};
}

Basis::Basis() : terms_{BasisTerm{}} {}

Basis::Basis(std::vector<BasisTerm> terms) {
    if (terms.empty() || terms.front().kind != BasisTerm::Kind::Intercept) {
        throw std::invalid_argument("basis: the first term must be the intercept");
    }
    terms_.push_back(terms.front());
    for (size_t t = 1; t < terms.size(); ++t) add(terms[t]);
}

Basis Basis::linear(int q) {
    Basis b;
    for (int j = 0; j < q; ++j) b.add_linear(j);
    return b;
}

Basis Basis::parse(const std::vector<std::string>& terms) {
    std::vector<BasisTerm> parsed;
    parsed.reserve(terms.size() + 1);
    for (const auto& t : terms) parsed.push_back(BasisTerm::parse(t));
    if (parsed.empty() || parsed.front().kind != BasisTerm::Kind::Intercept) {
        parsed.insert(parsed.begin(), BasisTerm{});
    }
    return Basis(std::move(parsed));
}

void Basis::add(BasisTerm term) {
    if (term.kind == BasisTerm::Kind::Intercept) {
        throw std::invalid_argument("basis: intercept may appear only once, first");
    }
    if (term.j < 0 || (term.kind == BasisTerm::Kind::Product && term.k < 0)) {
        throw std::invalid_argument("basis: negative coordinate index");
    }
    if (index_of(term) >= 0) {
        throw std::invalid_argument("basis: duplicate term " + term.to_string());
    }
    terms_.push_back(term);
}

Basis& Basis::add_linear(int j) {
    add({BasisTerm::Kind::Linear, j, -1});
    return *this;
}
Basis& Basis::add_square(int j) {
    add({BasisTerm::Kind::Square, j, -1});
    return *this;
}
Basis& Basis::add_product(int j, int k) {
    if (j == k) return add_square(j);
    add({BasisTerm::Kind::Product, std::min(j, k), std::max(j, k)});
    return *this;
}

int Basis::max_coordinate() const {
    int hi = -1;
    for (const auto& t : terms_) hi = std::max({hi, t.j, t.k});
    return hi;
}

int Basis::index_of(const BasisTerm& term) const {
    for (size_t t = 0; t < terms_.size(); ++t) {
        if (terms_[t] == term) return static_cast<int>(t);
    }
    return -1;
}

Eigen::VectorXd Basis::eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (max_coordinate() >= x.size()) {
        throw std::invalid_argument("basis references x" + std::to_string(max_coordinate() + 1) +
                                    " but x has " + std::to_string(x.size()) + " coordinates");
    }
    Eigen::VectorXd out(dim());
    for (int t = 0; t < dim(); ++t) out(t) = terms_[static_cast<size_t>(t)].eval(x);
    return out;
}

Eigen::MatrixXd Basis::design(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd out(x.rows(), dim());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = eval(x.row(i).transpose()).transpose();
    return out;
}

std::vector<std::string> Basis::describe() const {
    std::vector<std::string> out;
    for (const auto& t : terms_) out.push_back(t.to_string());
    return out;
}

}  // namespace drlogit
