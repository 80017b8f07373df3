#include "labelforge/dsl/program_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace labelforge::dsl {

LabelingProgram load_program(const std::filesystem::path& file, const ClassSpace& classes,
                             const ConceptSet* concepts) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open program " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse(ss.str(), classes, concepts, file.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(e.kind(), e.message(), e.line(), e.column(), e.token(), file.string());
    }
}

std::vector<LabelingProgram> load_programs(const std::filesystem::path& dir, const ClassSpace& classes,
                                           const ConceptSet* concepts) {
    if (!std::filesystem::is_directory(dir)) throw DataError("programs directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".lf") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .lf programs in " + dir.string());
    std::vector<LabelingProgram> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(load_program(f, classes, concepts));
    return out;
}

}  // namespace labelforge::dsl
