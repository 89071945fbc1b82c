#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rdiaudit::csv {

/// One parsed record plus the 1-based line it started on.
struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
/// Lines starting with '#' outside of a record are skipped when
/// `allow_comments` is set. Throws Error(MalformedRow) on an unterminated quote.
std::vector<Row> parse(std::istream& in, char delimiter = ',', bool allow_comments = false);
std::vector<Row> parse(std::string_view text, char delimiter = ',', bool allow_comments = false);

/// Header-addressed view over parsed rows.
class Table {
 public:
  static Table from_rows(std::vector<Row> rows);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::optional<std::size_t> column(std::string_view name) const;
  bool empty() const { return rows_.empty(); }

 private:
  std::vector<std::string> header_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<Row> rows_;
};

std::string escape(std::string_view field, char delimiter = ',');
void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

}  // namespace rdiaudit::csv
