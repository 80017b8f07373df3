#pragma once

#include <string>
#include <string_view>

#include "labelforge/core/error.hpp"
#include "labelforge/core/types.hpp"
#include "labelforge/dsl/ast.hpp"

namespace labelforge::dsl {

/// Syntax or validation failure in DSL source. line and column are 1-based;
/// column counts code points.
class ParseError : public Error {
public:
    enum class Kind { Syntax, Validation };

    /// `file`, when given, prefixes the position in what().
    ParseError(Kind kind, std::string message, int line, int column, std::string token, std::string file = {});

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] const std::string& message() const { return message_; }
    [[nodiscard]] int line() const { return line_; }
    [[nodiscard]] int column() const { return column_; }
    [[nodiscard]] const std::string& token() const { return token_; }
    [[nodiscard]] const std::string& file() const { return file_; }

private:
    Kind kind_;
    std::string message_;
    int line_;
    int column_;
    std::string token_;
    std::string file_;
};

/// Parses and validates a labeling program. Score predicates require
/// `concepts`; class targets resolve against `classes`.
LabelingProgram parse(std::string_view source, const ClassSpace& classes, const ConceptSet* concepts = nullptr,
                      std::string id = {});

/// Canonical source text; parse(pretty_print(p)) == p.
std::string pretty_print(const LabelingProgram& program, const ClassSpace& classes);

}  // namespace labelforge::dsl
