// Regenerates the scripted fixtures under tests/data/worked from the fixture
// model. Usage: make_worked_fixtures <worked dir>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "../tests/support/worked_cases.hpp"

namespace fs = std::filesystem;

namespace {

void write(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_worked_fixtures <worked dir>\n";
        return 2;
    }
    try {
        for (const auto& c : {longqa::testing::worked_left(), longqa::testing::worked_right()}) {
            const fs::path dir = fs::path(argv[1]) / c.name;
            write(dir / "corpus.jsonl", longqa::testing::corpus_jsonl(c.docs));
            write(dir / "transcript.jsonl", longqa::testing::record_transcript(c));
            write(dir / "query.txt", c.query);
            std::cerr << "wrote " << dir.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
