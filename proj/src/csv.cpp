/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "shard/csv.hpp"

#include <charconv>
#include <deque>
#include <fstream>
#include <sstream>

#include "shard/error.hpp"

namespace shard {

namespace {

struct CsvField {
  std::string_view text;
  bool quoted = false;
};

using Record = std::vector<CsvField>;

/// `field` is 0-based; messages use 1-based lines and columns.
[[noreturn]] void ParseFail(size_t line, size_t field, const std::string &what) {
  throw Error(ErrorCode::kParse,
              "line " + std::to_string(line) + ", column " + std::to_string(field + 1) + ": " + what);
}

/// Quoted fields are unescaped into `arena`; unquoted ones view `line`.
Record SplitLine(std::string_view line, char delim, size_t line_no, std::deque<std::string> &arena) {
  Record out;
  size_t i = 0;
  while (true) {
    CsvField field;
    if (i < line.size() && line[i] == '"') {
      field.quoted = true;
      ++i;
      std::string unescaped;
      bool closed = false;
      while (i < line.size()) {
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            unescaped.push_back('"');
            i += 2;
          } else {
            closed = true;
            ++i;
            break;
          }
        } else {
          unescaped.push_back(line[i++]);
        }
      }
      if (!closed) ParseFail(line_no, out.size(), "unterminated quoted field");
      field.text = arena.emplace_back(std::move(unescaped));
      if (i < line.size() && line[i] != delim) {
        ParseFail(line_no, out.size(), "unexpected character after closing quote");
      }
    } else {
      const size_t end = line.find(delim, i);
      const size_t stop = end == std::string_view::npos ? line.size() : end;
      field.text = line.substr(i, stop - i);
      i = stop;
    }
    out.push_back(std::move(field));
    if (i >= line.size()) break;
    ++i;  // delimiter
    if (i == line.size()) {
      out.emplace_back();
      break;
    }
  }
  return out;
}

bool ParseInt64(std::string_view s, int64_t &out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool ParseFloat64(std::string_view s, double &out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool ParseBool(std::string_view s, bool &out) {
  if (s == "true" || s == "True" || s == "TRUE") {
    out = true;
    return true;
  }
  if (s == "false" || s == "False" || s == "FALSE") {
    out = false;
    return true;
  }
  return false;
}

bool Parses(DataType type, const CsvField &f) {
  int64_t i;
  double d;
  bool b;
  switch (type) {
    case DataType::kInt64: return ParseInt64(f.text, i);
    case DataType::kFloat64: return ParseFloat64(f.text, d);
    case DataType::kBool: return ParseBool(f.text, b);
    case DataType::kUtf8: return true;
  }
  return false;
}

DataType InferColumn(const std::vector<Record> &records, size_t col) {
  const size_t window = std::min<size_t>(records.size(), kInferenceRows);
  for (auto type : {DataType::kInt64, DataType::kFloat64, DataType::kBool}) {
    bool all = window > 0;
    for (size_t r = 0; r < window && all; ++r) all = Parses(type, records[r][col]);
    if (all) return type;
  }
  return DataType::kUtf8;
}

}  // namespace

Table ReadCsvString(std::string_view text, const CsvReadOptions &options) {
  std::vector<Record> records;
  std::vector<size_t> line_numbers;
  std::deque<std::string> arena;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    const bool last = end == std::string_view::npos;
    if (last) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    pos = end + 1;
    // A single trailing newline does not start another record.
    if (line.empty() && pos >= text.size()) break;
    records.push_back(SplitLine(line, options.delimiter, line_no, arena));
    line_numbers.push_back(line_no);
  }
  if (records.empty()) throw Error(ErrorCode::kParse, "no records");

  std::vector<std::string> names;
  size_t first_data = 0;
  const size_t width = records.front().size();
  if (options.has_header) {
    for (auto &f : records.front()) names.emplace_back(f.text);
    first_data = 1;
  } else {
    for (size_t c = 0; c < width; ++c) names.push_back("c" + std::to_string(c));
  }
  for (size_t r = 0; r < records.size(); ++r) {
    if (records[r].size() != width) {
      ParseFail(line_numbers[r], std::min(records[r].size(), width),
                "expected " + std::to_string(width) + " fields, found " +
                    std::to_string(records[r].size()));
    }
  }
  std::vector<Record> data(std::make_move_iterator(records.begin() + static_cast<long>(first_data)),
                           std::make_move_iterator(records.end()));
  for (size_t r = 0; r < data.size(); ++r) {
    for (size_t c = 0; c < width; ++c) {
      if (!data[r][c].quoted && data[r][c].text.empty()) {
        ParseFail(line_numbers[r + first_data], c, "empty field");
      }
    }
  }

  std::vector<DataType> dtypes;
  if (options.dtypes) {
    if (options.dtypes->size() != width) {
      throw Error(ErrorCode::kConfig, "dtypes has " + std::to_string(options.dtypes->size()) +
                                          " entries for " + std::to_string(width) + " fields");
    }
    dtypes = *options.dtypes;
  } else {
    for (size_t c = 0; c < width; ++c) dtypes.push_back(InferColumn(data, c));
  }

  std::vector<Field> fields;
  for (size_t c = 0; c < width; ++c) fields.push_back({names[c], dtypes[c]});
  Schema schema;
  try {
    schema = Schema(std::move(fields));
  } catch (const Error &e) {
    ParseFail(line_numbers.front(), 0, std::string("invalid header: ") + e.what());
  }

  std::vector<Column> columns;
  for (size_t c = 0; c < width; ++c) {
    ColumnBuilder builder(dtypes[c]);
    builder.Reserve(static_cast<int64_t>(data.size()));
    for (size_t r = 0; r < data.size(); ++r) {
      const auto &f = data[r][c];
      auto bad = [&] {
        ParseFail(line_numbers[r + first_data], c,
                  "cannot parse '" + std::string(f.text) + "' as " + std::string(DataTypeName(dtypes[c])));
      };
      switch (dtypes[c]) {
        case DataType::kInt64: {
          int64_t v;
          if (!ParseInt64(f.text, v)) bad();
          builder.AppendInt64(v);
          break;
        }
        case DataType::kFloat64: {
          double v;
          if (!ParseFloat64(f.text, v)) bad();
          builder.AppendFloat64(v);
          break;
        }
        case DataType::kBool: {
          bool v;
          if (!ParseBool(f.text, v)) bad();
          builder.AppendBool(v);
          break;
        }
        case DataType::kUtf8: builder.AppendString(f.text); break;
      }
    }
    columns.push_back(builder.Finish());
  }
  return Table(std::move(schema), std::move(columns));
}

Table ReadCsv(const std::filesystem::path &path, const CsvReadOptions &options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "failed reading " + path.string());
  return ReadCsvString(buf.str(), options);
}

namespace {

void AppendCell(std::string &out, const Column &col, int64_t row, char delim) {
  if (!col.is_valid(row)) return;
  char buf[64];
  switch (col.dtype()) {
    case DataType::kInt64: {
      auto res = std::to_chars(buf, buf + sizeof(buf), col.int64_values()[row]);
      out.append(buf, res.ptr);
      break;
    }
    case DataType::kFloat64: {
      auto res = std::to_chars(buf, buf + sizeof(buf), col.float64_values()[row]);
      out.append(buf, res.ptr);
      break;
    }
    case DataType::kBool: out += col.bool_values()[row] ? "true" : "false"; break;
    case DataType::kUtf8: {
      const auto s = col.utf8_values().at(row);
      const bool quote = s.empty() || s.find_first_of(std::string{delim, '"', '\r', '\n'}) !=
                                          std::string_view::npos;
      if (!quote) {
        out.append(s);
        break;
      }
      out.push_back('"');
      for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
      }
      out.push_back('"');
      break;
    }
  }
}

}  // namespace

std::string WriteCsvString(const Table &table, const CsvWriteOptions &options) {
  std::string out;
  bool first_record = true;
  if (options.write_header) {
    for (int c = 0; c < table.num_columns(); ++c) {
      if (c) out.push_back(options.delimiter);
      out += table.schema().field(c).name;
    }
    first_record = false;
  }
  for (int64_t r = 0; r < table.num_rows(); ++r) {
    if (!first_record) out.push_back('\n');
    first_record = false;
    for (int c = 0; c < table.num_columns(); ++c) {
      if (c) out.push_back(options.delimiter);
      AppendCell(out, table.column(c), r, options.delimiter);
    }
  }
  return out;
}

void WriteCsv(const Table &table, const std::filesystem::path &path, const CsvWriteOptions &options) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  const auto text = WriteCsvString(table, options);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

}  // namespace shard
