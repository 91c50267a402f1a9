#include "ragforge/jsonl.hpp"

namespace ragforge {

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const Json&)>& fn,
                    const std::function<void(std::size_t, const std::string&)>& on_bad_line) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        Json obj = Json::parse(line, nullptr, false);
        if (obj.is_discarded()) {
            if (on_bad_line) {
                on_bad_line(line_no, "invalid JSON");
                continue;
            }
            throw Error(ErrorCode::MalformedRecord,
                        path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
        }
        fn(line_no, obj);
    }
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

void JsonlWriter::write(const Json& obj) {
    out_ << obj.dump() << '\n';
    ++count_;
}

void JsonlWriter::close() {
    out_.close();
    if (out_.fail())
        throw Error(ErrorCode::IoError, "write failed: " + path_.string());
}

Json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    Json value = Json::parse(in, nullptr, false);
    if (value.is_discarded())
        throw Error(ErrorCode::MalformedRecord, "invalid JSON in " + path.string());
    return value;
}

void save_json_file(const std::filesystem::path& path, const Json& value, int indent) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << value.dump(indent) << '\n';
    if (!out)
        throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

} // namespace ragforge
