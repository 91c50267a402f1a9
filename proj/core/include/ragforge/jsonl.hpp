#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "ragforge/errors.hpp"

namespace ragforge {

using Json = nlohmann::json;

/// Calls `fn(line_number, object)` for every non-blank line of a JSONL file.
/// Line numbers are 1-based. A line that is not valid JSON raises
/// Error(MalformedRecord) unless `on_bad_line` swallows it.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const Json&)>& fn,
                    const std::function<void(std::size_t, const std::string&)>& on_bad_line = {});

class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path);

    void write(const Json& obj);
    std::size_t count() const { return count_; }
    void close();

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::size_t count_ = 0;
};

Json load_json_file(const std::filesystem::path& path);
void save_json_file(const std::filesystem::path& path, const Json& value, int indent = 2);

} // namespace ragforge
