#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bsdebm {

// Base for every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RateMatrixViolation {
    NotSquare,
    TooFewStates,
    InvalidC,
    OffDiagonalOutOfBounds,
    ColumnSumNonzero,
};

inline const char* to_string(RateMatrixViolation v) {
    switch (v) {
    case RateMatrixViolation::NotSquare: return "NotSquare";
    case RateMatrixViolation::TooFewStates: return "TooFewStates";
    case RateMatrixViolation::InvalidC: return "InvalidC";
    case RateMatrixViolation::OffDiagonalOutOfBounds: return "OffDiagonalOutOfBounds";
    case RateMatrixViolation::ColumnSumNonzero: return "ColumnSumNonzero";
    }
    return "Unknown";
}

struct RateMatrixIssue {
    RateMatrixViolation kind;
    std::string detail;
};

class RateMatrixError : public Error {
public:
    explicit RateMatrixError(std::vector<RateMatrixIssue> issues)
        : Error(render(issues)), issues_(std::move(issues)) {}

    const std::vector<RateMatrixIssue>& issues() const noexcept { return issues_; }

    bool has(RateMatrixViolation kind) const noexcept {
        for (const auto& i : issues_)
            if (i.kind == kind) return true;
        return false;
    }

private:
    static std::string render(const std::vector<RateMatrixIssue>& issues) {
        std::string out = "invalid rate matrix:";
        for (const auto& i : issues) {
            out += "\n  ";
            out += to_string(i.kind);
            out += ": ";
            out += i.detail;
        }
        return out;
    }

    std::vector<RateMatrixIssue> issues_;
};

// Quadratic form of a supposedly PSD matrix came out clearly negative.
class NegativeBeyondTolerance : public Error {
public:
    using Error::Error;
};

class PathStoreError : public Error {
public:
    enum class Kind { VersionMismatch, CorruptRecord, Io };

    PathStoreError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class SolverError : public Error {
public:
    enum class Kind { NoConvergence, GridTooCoarse, InvalidInput };

    SolverError(Kind kind, const std::string& what, double last_ratio = 0.0)
        : Error(what), kind_(kind), last_ratio_(last_ratio) {}
    Kind kind() const noexcept { return kind_; }
    double last_ratio() const noexcept { return last_ratio_; }

private:
    Kind kind_;
    double last_ratio_;
};

class PremiseViolated : public Error {
public:
    PremiseViolated(int premise, const std::string& where)
        : Error("comparison premise (" + std::to_string(premise) + ") violated: " + where),
          premise_(premise) {}
    int premise() const noexcept { return premise_; }

private:
    int premise_;
};

class ComparisonViolated : public Error {
public:
    ComparisonViolated(double margin, const std::string& where)
        : Error("comparison violated by " + std::to_string(-margin) + " at " + where),
          margin_(margin) {}
    double margin() const noexcept { return margin_; }

private:
    double margin_;
};

class AxiomViolation : public Error {
public:
    AxiomViolation(int property, const std::string& witness)
        : Error("sublinear property " + std::to_string(property) + " violated: " + witness),
          property_(property) {}
    int property() const noexcept { return property_; }

private:
    int property_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace bsdebm
