#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kenn/error.hpp"

namespace kenn {

enum class Arity { Unary = 1, Binary = 2 };

struct PredicateSymbol {
    std::string name;
    Arity arity = Arity::Unary;

    friend bool operator==(const PredicateSymbol&, const PredicateSymbol&) = default;
};

// Argument pattern of a literal. Binary predicates only ever take (x,y).
enum class Args { X, Y, XY };

struct Literal {
    PredicateSymbol predicate;
    bool negated = false;
    Args args = Args::X;

    friend bool operator==(const Literal&, const Literal&) = default;
};

struct ClauseWeight {
    bool learnable = true;
    // Fixed weight, or initial effective weight when learnable.
    double value = 0.5;

    static ClauseWeight fixed(double w) { return {false, w}; }
    static ClauseWeight learned(double init) { return {true, init}; }

    friend bool operator==(const ClauseWeight&, const ClauseWeight&) = default;
};

enum class ClauseKind { Unary, Binary };

struct Clause {
    std::vector<Literal> literals;
    ClauseWeight weight;
    ClauseKind kind = ClauseKind::Unary;

    friend bool operator==(const Clause&, const Clause&) = default;
};

// Column layout of the unary (z_U) and binary (z_B) pre-activation matrices.
class Catalog {
public:
    Catalog() = default;
    Catalog(std::vector<std::string> unary, std::vector<std::string> binary);

    const std::vector<std::string>& unary() const { return unary_; }
    const std::vector<std::string>& binary() const { return binary_; }
    std::optional<std::size_t> unary_column(std::string_view name) const;
    std::optional<std::size_t> binary_column(std::string_view name) const;
    std::optional<PredicateSymbol> lookup(std::string_view name) const;

    friend bool operator==(const Catalog&, const Catalog&) = default;

private:
    std::vector<std::string> unary_;
    std::vector<std::string> binary_;
};

struct Knowledge {
    std::vector<Clause> clauses;
    Catalog catalog;
    std::vector<std::size_t> unary_clauses;   // K_U, indices into clauses
    std::vector<std::size_t> binary_clauses;  // K_B

    std::size_t column(const Literal& lit) const;
};

class ParseError : public Error {
public:
    enum class Kind {
        UnknownPredicate,
        ArityMismatch,
        RepeatedLiteral,
        BadVariable,
        MalformedWeight,
        EmptyClause,
        Syntax,
    };

    ParseError(Kind kind, std::size_t line, std::size_t column, const std::string& message);

    Kind kind() const { return kind_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    Kind kind_;
    std::size_t line_;
    std::size_t column_;
};

std::string_view to_string(ParseError::Kind kind);

inline constexpr double kDefaultClauseWeightInit = 0.5;

// Parse a knowledge file: one clause per line, `weight ':' literal (',' literal)*`,
// where weight is a non-negative decimal (fixed) or `_` (learnable). `#` lines
// and blank lines are skipped. Throws ParseError (1-based line/column) or
// ConfigError when the declared catalogs are invalid.
Knowledge parse_knowledge(std::string_view text, std::span<const std::string> declared_unary,
                          std::span<const std::string> declared_binary,
                          double learnable_init = kDefaultClauseWeightInit);

Clause parse_clause(std::string_view line, const Catalog& catalog,
                    double learnable_init = kDefaultClauseWeightInit, std::size_t line_no = 1);

std::string canonical_string(const Clause& clause);

struct GroundingCount {
    std::size_t unary = 0;
    std::size_t binary = 0;

    friend bool operator==(const GroundingCount&, const GroundingCount&) = default;
};

GroundingCount grounding_count(const Knowledge& knowledge, std::size_t num_constants,
                               std::size_t num_edges);

bool is_identifier(std::string_view name);

}  // namespace kenn
