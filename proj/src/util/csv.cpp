#include "rdiaudit/util/csv.hpp"

#include <sstream>

#include "rdiaudit/error.hpp"
#include "rdiaudit/util/text.hpp"

namespace rdiaudit::csv {

std::vector<Row> parse(std::string_view text, char delimiter, bool allow_comments) {
  std::vector<Row> rows;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();

  // Skip a UTF-8 byte order mark.
  if (n >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;

  while (i < n) {
    if (allow_comments && text[i] == '#') {
      while (i < n && text[i] != '\n') ++i;
      if (i < n) ++i;
      ++line;
      continue;
    }
    if (text[i] == '\n' || (text[i] == '\r' && i + 1 < n && text[i + 1] == '\n')) {
      i += text[i] == '\r' ? 2 : 1;
      ++line;
      continue;
    }

    Row row;
    row.line = line;
    std::string field;
    bool in_quotes = false;
    bool done = false;
    while (!done) {
      if (i >= n) {
        if (in_quotes) {
          throw Error(ErrorCode::MalformedRow,
                      "unterminated quoted field starting on line " + std::to_string(row.line));
        }
        row.fields.push_back(std::move(field));
        done = true;
        break;
      }
      char c = text[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            field.push_back('"');
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        continue;
      }
      if (c == '"' && field.empty()) {
        in_quotes = true;
        ++i;
      } else if (c == delimiter) {
        row.fields.push_back(std::move(field));
        field.clear();
        ++i;
      } else if (c == '\n' || (c == '\r' && i + 1 < n && text[i + 1] == '\n')) {
        row.fields.push_back(std::move(field));
        i += c == '\r' ? 2 : 1;
        ++line;
        done = true;
      } else {
        field.push_back(c);
        ++i;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Row> parse(std::istream& in, char delimiter, bool allow_comments) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(std::string_view(buf.str()), delimiter, allow_comments);
}

Table Table::from_rows(std::vector<Row> rows) {
  Table t;
  if (rows.empty()) return t;
  t.header_ = rows.front().fields;
  for (std::size_t c = 0; c < t.header_.size(); ++c) {
    t.index_.emplace(std::string(text::trim(t.header_[c])), c);
  }
  t.rows_.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
  return t;
}

std::optional<std::size_t> Table::column(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string escape(std::string_view field, char delimiter) {
  bool quote = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string_view::npos;
  if (!quote) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << delimiter;
    out << escape(fields[i], delimiter);
  }
  out << '\n';
}

}  // namespace rdiaudit::csv
