#include "labelforge/dsl/extract.hpp"

namespace labelforge::dsl {

std::vector<std::string> fenced_blocks(std::string_view text) {
    std::vector<std::string> blocks;
    std::size_t pos = 0;
    while (true) {
        const std::size_t open = text.find("```", pos);
        if (open == std::string_view::npos) break;
        std::size_t body = text.find('\n', open + 3);
        if (body == std::string_view::npos) break;
        ++body;
        const std::size_t close = text.find("```", body);
        if (close == std::string_view::npos) break;
        blocks.emplace_back(text.substr(body, close - body));
        pos = close + 3;
    }
    return blocks;
}

Extraction extract_program(std::string_view llm_response, const ClassSpace& classes, const ConceptSet* concepts,
                           std::string id) {
    Extraction out;
    const auto blocks = fenced_blocks(llm_response);
    if (blocks.empty()) {
        out.rejection = "no program found";
        return out;
    }
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        try {
            out.program = parse(blocks[k], classes, concepts, id);
            out.source = blocks[k];
            return out;
        } catch (const ParseError& e) {
            out.errors.push_back("block " + std::to_string(k + 1) + ": " + e.what());
        }
    }
    out.rejection = "no block parsed as a program";
    return out;
}

}  // namespace labelforge::dsl
