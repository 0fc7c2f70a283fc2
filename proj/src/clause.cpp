#include "kenn/clause.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

namespace kenn {

bool is_identifier(std::string_view name) {
    if (name.empty() || !std::isalpha(static_cast<unsigned char>(name.front()))) return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

Catalog::Catalog(std::vector<std::string> unary, std::vector<std::string> binary)
    : unary_(std::move(unary)), binary_(std::move(binary)) {
    std::set<std::string> seen;
    for (const auto* list : {&unary_, &binary_}) {
        for (const auto& name : *list) {
            if (!is_identifier(name)) throw ConfigError("invalid predicate name '" + name + "'");
            if (!seen.insert(name).second) {
                throw ConfigError("predicate '" + name + "' declared more than once");
            }
        }
    }
}

std::optional<std::size_t> Catalog::unary_column(std::string_view name) const {
    auto it = std::find(unary_.begin(), unary_.end(), name);
    if (it == unary_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - unary_.begin());
}

std::optional<std::size_t> Catalog::binary_column(std::string_view name) const {
    auto it = std::find(binary_.begin(), binary_.end(), name);
    if (it == binary_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - binary_.begin());
}

std::optional<PredicateSymbol> Catalog::lookup(std::string_view name) const {
    if (unary_column(name)) return PredicateSymbol{std::string(name), Arity::Unary};
    if (binary_column(name)) return PredicateSymbol{std::string(name), Arity::Binary};
    return std::nullopt;
}

std::size_t Knowledge::column(const Literal& lit) const {
    auto col = lit.predicate.arity == Arity::Unary ? catalog.unary_column(lit.predicate.name)
                                                   : catalog.binary_column(lit.predicate.name);
    if (!col) throw ConfigError("predicate '" + lit.predicate.name + "' not in catalog");
    return *col;
}

ParseError::ParseError(Kind kind, std::size_t line, std::size_t column, const std::string& message)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
            message),
      kind_(kind),
      line_(line),
      column_(column) {}

std::string_view to_string(ParseError::Kind kind) {
    switch (kind) {
        case ParseError::Kind::UnknownPredicate: return "UnknownPredicate";
        case ParseError::Kind::ArityMismatch: return "ArityMismatch";
        case ParseError::Kind::RepeatedLiteral: return "RepeatedLiteral";
        case ParseError::Kind::BadVariable: return "BadVariable";
        case ParseError::Kind::MalformedWeight: return "MalformedWeight";
        case ParseError::Kind::EmptyClause: return "EmptyClause";
        case ParseError::Kind::Syntax: return "Syntax";
    }
    return "Unknown";
}

namespace {

class LineParser {
public:
    LineParser(std::string_view line, const Catalog& catalog, std::size_t line_no)
        : s_(line), catalog_(catalog), line_no_(line_no) {}

    Clause parse(double learnable_init) {
        Clause clause;
        clause.weight = parse_weight(learnable_init);
        skip_ws();
        if (at_end()) fail(ParseError::Kind::EmptyClause, "clause has no literals");
        while (true) {
            const std::size_t start = pos_;
            Literal lit = parse_literal();
            if (std::find(clause.literals.begin(), clause.literals.end(), lit) !=
                clause.literals.end()) {
                fail(ParseError::Kind::RepeatedLiteral, "repeated literal", start);
            }
            clause.literals.push_back(std::move(lit));
            skip_ws();
            if (at_end()) break;
            expect(',');
        }
        const bool unary = std::all_of(clause.literals.begin(), clause.literals.end(),
                                       [](const Literal& l) {
                                           return l.predicate.arity == Arity::Unary &&
                                                  l.args == Args::X;
                                       });
        clause.kind = unary ? ClauseKind::Unary : ClauseKind::Binary;
        return clause;
    }

private:
    [[noreturn]] void fail(ParseError::Kind kind, const std::string& msg) const { fail(kind, msg, pos_); }
    [[noreturn]] void fail(ParseError::Kind kind, const std::string& msg, std::size_t at) const {
        throw ParseError(kind, line_no_, at + 1, msg);
    }

    bool at_end() const { return pos_ >= s_.size(); }
    void skip_ws() {
        while (!at_end() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
    }
    void expect(char c) {
        skip_ws();
        if (at_end() || s_[pos_] != c) {
            fail(ParseError::Kind::Syntax, std::string("expected '") + c + "'");
        }
        ++pos_;
    }

    ClauseWeight parse_weight(double learnable_init) {
        const auto colon = s_.find(':');
        if (colon == std::string_view::npos) {
            fail(ParseError::Kind::MalformedWeight, "missing 'weight:' prefix", 0);
        }
        skip_ws();
        const std::size_t start = pos_;
        std::size_t end = colon;
        while (end > start && (s_[end - 1] == ' ' || s_[end - 1] == '\t')) --end;
        const std::string_view token = s_.substr(start, end - start);
        pos_ = colon + 1;
        if (token == "_") return ClauseWeight::learned(learnable_init);
        if (token.empty()) fail(ParseError::Kind::MalformedWeight, "empty weight", start);
        double w = 0.0;
        const auto* first = token.data();
        const auto* last = token.data() + token.size();
        auto [ptr, ec] = std::from_chars(first, last, w);
        if (ec != std::errc{} || ptr != last || !std::isfinite(w) || token.front() == '-' ||
            !std::isdigit(static_cast<unsigned char>(token.back()))) {
            fail(ParseError::Kind::MalformedWeight,
                 "weight must be '_' or a non-negative decimal, got '" + std::string(token) + "'",
                 start);
        }
        return ClauseWeight::fixed(w);
    }

    Args parse_args(Arity arity, std::size_t lit_start) {
        expect('(');
        std::vector<std::pair<char, std::size_t>> vars;
        while (true) {
            skip_ws();
            const std::size_t at = pos_;
            std::size_t end = pos_;
            while (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_'))
                ++end;
            if (end == pos_) fail(ParseError::Kind::Syntax, "expected a variable");
            const std::string_view var = s_.substr(pos_, end - pos_);
            pos_ = end;
            if (var != "x" && var != "y" && var != "X" && var != "Y") {
                fail(ParseError::Kind::BadVariable,
                     "variable '" + std::string(var) + "' is not x or y", at);
            }
            vars.emplace_back(static_cast<char>(std::tolower(var.front())), at);
            skip_ws();
            if (!at_end() && s_[pos_] == ',') {
                ++pos_;
                continue;
            }
            expect(')');
            break;
        }
        const std::size_t expected = arity == Arity::Unary ? 1 : 2;
        if (vars.size() != expected) {
            fail(ParseError::Kind::ArityMismatch,
                 "predicate takes " + std::to_string(expected) + " argument(s), got " +
                     std::to_string(vars.size()),
                 lit_start);
        }
        if (arity == Arity::Unary) return vars[0].first == 'x' ? Args::X : Args::Y;
        if (vars[0].first != 'x' || vars[1].first != 'y') {
            fail(ParseError::Kind::BadVariable, "binary literals must use (x,y)", vars[0].second);
        }
        return Args::XY;
    }

    Literal parse_literal() {
        skip_ws();
        const std::size_t start = pos_;
        std::size_t end = pos_;
        while (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_'))
            ++end;
        const std::string_view name = s_.substr(pos_, end - pos_);
        if (!is_identifier(name)) fail(ParseError::Kind::Syntax, "expected a literal");
        pos_ = end;

        auto plain = catalog_.lookup(name);
        std::optional<PredicateSymbol> negated;
        if (name.size() > 1 && name.front() == 'n') negated = catalog_.lookup(name.substr(1));
        if (plain && negated) {
            fail(ParseError::Kind::Syntax,
                 "'" + std::string(name) + "' is ambiguous: both a predicate and a negation", start);
        }
        if (!plain && !negated) {
            fail(ParseError::Kind::UnknownPredicate,
                 "unknown predicate '" + std::string(name) + "'", start);
        }
        Literal lit;
        lit.negated = negated.has_value();
        lit.predicate = lit.negated ? *negated : *plain;
        lit.args = parse_args(lit.predicate.arity, start);
        return lit;
    }

    std::string_view s_;
    const Catalog& catalog_;
    std::size_t line_no_;
    std::size_t pos_ = 0;
};

}  // namespace

Clause parse_clause(std::string_view line, const Catalog& catalog, double learnable_init,
                    std::size_t line_no) {
    return LineParser(line, catalog, line_no).parse(learnable_init);
}

Knowledge parse_knowledge(std::string_view text, std::span<const std::string> declared_unary,
                          std::span<const std::string> declared_binary, double learnable_init) {
    Knowledge k;
    k.catalog = Catalog({declared_unary.begin(), declared_unary.end()},
                        {declared_binary.begin(), declared_binary.end()});
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#') continue;
        k.clauses.push_back(parse_clause(line, k.catalog, learnable_init, line_no));
        auto& bucket = k.clauses.back().kind == ClauseKind::Unary ? k.unary_clauses : k.binary_clauses;
        bucket.push_back(k.clauses.size() - 1);
    }
    return k;
}

std::string canonical_string(const Clause& clause) {
    std::string out;
    if (clause.weight.learnable) {
        out = "_";
    } else {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), clause.weight.value);
        out.assign(buf, ptr);
    }
    out += ':';
    for (std::size_t i = 0; i < clause.literals.size(); ++i) {
        const auto& lit = clause.literals[i];
        if (i > 0) out += ',';
        if (lit.negated) out += 'n';
        out += lit.predicate.name;
        switch (lit.args) {
            case Args::X: out += "(x)"; break;
            case Args::Y: out += "(y)"; break;
            case Args::XY: out += "(x,y)"; break;
        }
    }
    return out;
}

GroundingCount grounding_count(const Knowledge& knowledge, std::size_t num_constants,
                               std::size_t num_edges) {
    return {knowledge.unary_clauses.size() * num_constants,
            knowledge.binary_clauses.size() * num_edges};
}

}  // namespace kenn
