#include <doctest.h>

#include <fstream>
#include <sstream>

#include "rdiaudit/error.hpp"
#include "rdiaudit/util/csv.hpp"
#include "rdiaudit/util/digest.hpp"
#include "rdiaudit/util/files.hpp"
#include "rdiaudit/util/text.hpp"
#include "test_support.hpp"

using namespace rdiaudit;
namespace fs = std::filesystem;

TEST_CASE("csv: quoted fields, doubled quotes, embedded newline, CRLF") {
  auto rows = csv::parse("a,b,c\r\n\"x,y\",\"he said \"\"hi\"\"\",\"two\nlines\"\r\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].fields == std::vector<std::string>{"x,y", "he said \"hi\"", "two\nlines"});
  CHECK(rows[1].line == 2);
}

TEST_CASE("csv: comments and delimiter") {
  auto rows = csv::parse("# note\nA\tB\n# again\n1\t2\n", '\t', true);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].fields == std::vector<std::string>{"1", "2"});
  CHECK(rows[1].line == 4);
}

TEST_CASE("csv: unterminated quote is an error") {
  try {
    csv::parse("a,b\n\"open,1\n");
    FAIL("expected MalformedRow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedRow);
  }
}

TEST_CASE("csv: escape round trip") {
  std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", "new\nline", ""};
  std::ostringstream out;
  csv::write_row(out, fields);
  auto rows = csv::parse(out.str());
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].fields == fields);
  CHECK(csv::escape("plain") == "plain");
  CHECK(csv::escape("a,b") == "\"a,b\"");
}

TEST_CASE("csv: table header lookup") {
  auto t = csv::Table::from_rows(csv::parse("x,y\n1,2\n"));
  CHECK(t.header() == std::vector<std::string>{"x", "y"});
  CHECK(t.column("y") == 1u);
  CHECK_FALSE(t.column("z").has_value());
  CHECK(t.rows().size() == 1);
}

TEST_CASE("digest: sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("digest: short digest joins with the unit separator") {
  CHECK(short_digest({"a", "b"}) == sha256_hex(std::string("a\x1f" "b")).substr(0, 16));
  CHECK(short_digest({"ab"}) != short_digest({"a", "b"}));
  CHECK(short_digest({"x"}, 8).size() == 8);
}

TEST_CASE("text: casefold") {
  CHECK(text::casefold("FRENCH") == "french");
  CHECK(text::casefold("Ελληνικά") == "ελληνικά");
  CHECK(text::casefold("ÉCOLE") == "école");
  CHECK(text::casefold("Русский") == "русский");
  CHECK(text::casefold("日本語") == "日本語");
}

TEST_CASE("text: trim split join contains_word") {
  CHECK(text::trim("  x \t") == "x");
  CHECK(text::split("a;;b", ';') == std::vector<std::string>{"a", "", "b"});
  CHECK(text::join({"a", "b"}, ", ") == "a, b");
  CHECK(text::contains_word("the toolkit.", "toolkit"));
  CHECK_FALSE(text::contains_word("toolkits", "toolkit"));
}

TEST_CASE("text: half-up rounding") {
  CHECK(text::format_fixed(1.005) == "1.01");
  CHECK(text::format_fixed(0.125) == "0.13");
  CHECK(text::format_fixed(26 / 13.7) == "1.90");
  CHECK(text::format_fixed(0.0) == "0.00");
  CHECK(text::format_fixed(-0.001) == "0.00");
  CHECK(text::round_half_up(2.675, 2) == doctest::Approx(2.68));
  CHECK(text::format_shortest(25.0) == "25.0");
  CHECK(text::format_shortest(0.1) == "0.1");
}

TEST_CASE("files: atomic write, durable append, torn tail") {
  testing::TempDir dir;
  auto p = dir / "sub/f.txt";
  files::write_atomic(p, "hello");
  CHECK(files::read_text(p) == "hello");
  files::write_atomic(p, "again");
  CHECK(files::read_text(p) == "again");

  auto log = dir / "log.txt";
  files::append_line_durable(log, "one");
  files::append_line_durable(log, "two");
  CHECK(files::read_text(log) == "one\ntwo\n");
  CHECK_FALSE(files::repair_torn_tail(log));
  {
    std::ofstream out(log, std::ios::app);
    out << "{\"partial";
  }
  CHECK(files::repair_torn_tail(log));
  CHECK(files::read_text(log) == "one\ntwo\n");
  CHECK_FALSE(files::exists(dir / "nope"));
}

TEST_CASE("files: lock is exclusive") {
  testing::TempDir dir;
  {
    files::FileLock a(dir / ".lock");
    try {
      files::FileLock b(dir / ".lock");
      FAIL("expected LedgerLocked");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::LedgerLocked);
    }
  }
  files::FileLock again(dir / ".lock");
}

TEST_CASE("files: missing file") {
  try {
    files::read_text("/nonexistent/definitely/not/here");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::MissingFile || e.code() == ErrorCode::IoError));
  }
}
