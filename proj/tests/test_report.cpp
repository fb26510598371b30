#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "loclab/report.hpp"

using namespace loclab;

TEST_SUITE("report") {

TEST_CASE("numbers round trip") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5}) CHECK(std::stod(format_number(v)) == v);
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(json_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(json_number(2.0) == 2.0);
}

TEST_CASE("csv table") {
  CsvTable t({"a", "b"});
  t.add_row(std::vector<double>{1.0, 0.5});
  t.add_row(std::vector<std::string>{"x", "y"});
  CHECK(t.str() == "a,b\n1,0.5\nx,y\n");
  CHECK_THROWS(t.add_row(std::vector<double>{1.0}));
}

TEST_CASE("atomic writes replace the file") {
  const auto path = std::filesystem::temp_directory_path() / "loclab_atomic.json";
  write_json_atomic(path, {{"k", 1}});
  write_json_atomic(path, {{"k", 2}});
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "{\n  \"k\": 2\n}\n");
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove(path);
}

}
