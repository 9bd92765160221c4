#include <doctest.h>

#include <sstream>

#include "softscore/csv.hpp"
#include "softscore/errors.hpp"

using namespace softscore;

TEST_CASE("split_line") {
  CHECK(csv::split_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(csv::split_line("x,1\r") == std::vector<std::string>{"x", "1"});
  CHECK(csv::split_line("") == std::vector<std::string>{""});
}

TEST_CASE("parse_real is strict") {
  CHECK(csv::parse_real("3.38", 1, "mos") == 3.38);
  CHECK(csv::parse_real("-1e-3", 1, "mos") == -0.001);
  CHECK_THROWS_AS(csv::parse_real(" 2.5", 1, "mos"), ParseError);
  CHECK_THROWS_AS(csv::parse_real("abc", 2, "mos"), ParseError);
  CHECK_THROWS_AS(csv::parse_real("1,5", 2, "mos"), ParseError);
  CHECK_THROWS_AS(csv::parse_real("1.5x", 2, "mos"), ParseError);
  CHECK_THROWS_AS(csv::parse_real("", 2, "mos"), ParseError);
  CHECK_THROWS_AS(csv::parse_real("nan", 2, "mos"), ParseError);
  try {
    csv::parse_real("abc", 2, "mos");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("fixed formatting") {
  CHECK(csv::fixed(0.5) == "0.500000");
  CHECK(csv::fixed(-0.0000001) == "0.000000");
  CHECK(csv::fixed(1.0 / 3.0, 3) == "0.333");
}

TEST_CASE("next_line strips BOM and CR") {
  std::istringstream in("\xEF\xBB\xBFid,mos\r\nx,1\r\n");
  std::string line;
  REQUIRE(csv::next_line(in, line));
  CHECK(line == "id,mos");
  REQUIRE(csv::next_line(in, line));
  CHECK(line == "x,1");
  CHECK_FALSE(csv::next_line(in, line));
}
