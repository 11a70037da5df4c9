#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace drlogit {

struct BasisTerm {
    enum class Kind { Intercept, Linear, Square, Product };
    Kind kind = Kind::Intercept;
    int j = -1;
    int k = -1;

    bool operator==(const BasisTerm&) const = default;

    double eval(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    // "1", "x1", "x1^2", "x1*x2" (coordinates are 1-based in text).
    std::string to_string() const;
    static BasisTerm parse(const std::string& text);
};

/// Deterministic feature map b(x). The first term is always the intercept.
class Basis {
public:
    Basis();  // intercept only
    explicit Basis(std::vector<BasisTerm> terms);

    static Basis intercept_only() { return Basis(); }
    static Basis linear(int q);
    static Basis parse(const std::vector<std::string>& terms);

    Basis& add_linear(int j);
    Basis& add_square(int j);
    Basis& add_product(int j, int k);

    int dim() const { return static_cast<int>(terms_.size()); }
    const std::vector<BasisTerm>& terms() const { return terms_; }
    // Largest coordinate index referenced, -1 for intercept-only.
    int max_coordinate() const;
    int index_of(const BasisTerm& term) const;  // -1 when absent

    Eigen::VectorXd eval(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::MatrixXd design(const Eigen::MatrixXd& x) const;

    std::vector<std::string> describe() const;

private:
    void add(BasisTerm term);
    std::vector<BasisTerm> terms_;
};

}  // namespace drlogit
