#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "retrace/errors.hpp"

namespace retrace {

// Shared on-disk container: a sequence of length-delimited JSON records.
// Record zero is the header and carries the schema version for the file kind:
//
//   <byte length>\n
//   {"container":1,"kind":"buffer","schema":1}\n
//   <byte length>\n
//   {...}\n
//   ...
//
// Buffer snapshots, memory stores and episode results all use this container.
inline constexpr int kContainerVersion = 1;

class RecordWriter {
 public:
  RecordWriter(const std::filesystem::path& path, const std::string& kind, int schema)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw SchemaError("cannot open for writing: " + path.string());
    write(nlohmann::json{{"container", kContainerVersion}, {"kind", kind}, {"schema", schema}});
  }

  void write(const nlohmann::json& record) {
    const std::string payload = record.dump();
    out_ << payload.size() << '\n' << payload << '\n';
    if (!out_) throw SchemaError("write failed");
  }

 private:
  std::ofstream out_;
};

class RecordReader {
 public:
  RecordReader(const std::filesystem::path& path, const std::string& expect_kind, int max_schema)
      : in_(path, std::ios::binary) {
    if (!in_) throw SchemaError("cannot open: " + path.string());
    nlohmann::json header;
    if (!next(header)) throw SchemaError("missing header record: " + path.string());
    if (!header.is_object() || !header.contains("container") || !header.contains("kind") ||
        !header.contains("schema")) {
      throw SchemaError("malformed header record: " + path.string());
    }
    if (header["container"].get<int>() > kContainerVersion) {
      throw VersionMismatch("container " + header["container"].dump());
    }
    if (header["kind"].get<std::string>() != expect_kind) {
      throw SchemaError("expected kind '" + expect_kind + "', found '" +
                        header["kind"].get<std::string>() + "'");
    }
    schema_ = header["schema"].get<int>();
    if (schema_ > max_schema) {
      throw VersionMismatch("schema " + std::to_string(schema_) + " > supported " +
                            std::to_string(max_schema));
    }
  }

  int schema() const { return schema_; }

  // Reads the next record into `out`; false at clean end-of-file.
  bool next(nlohmann::json& out) {
    std::string len_line;
    if (!std::getline(in_, len_line)) return false;
    std::size_t len = 0;
    try {
      std::size_t pos = 0;
      len = std::stoull(len_line, &pos);
      if (pos != len_line.size()) throw std::invalid_argument("trailing bytes");
    } catch (const std::exception&) {
      throw SchemaError("bad record length line: '" + len_line + "'");
    }
    std::string payload(len, '\0');
    in_.read(payload.data(), static_cast<std::streamsize>(len));
    if (in_.gcount() != static_cast<std::streamsize>(len)) throw SchemaError("truncated record");
    char nl = 0;
    in_.get(nl);
    if (nl != '\n') throw SchemaError("record not newline terminated");
    try {
      out = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("record is not valid JSON: ") + e.what());
    }
    return true;
  }

 private:
  std::ifstream in_;
  int schema_ = 0;
};

}  // namespace retrace
