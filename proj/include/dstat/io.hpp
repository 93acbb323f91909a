#pragma once

#include <string>

#include "json.hpp"

#include "dstat/problem.hpp"

namespace dstat {

using json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json expr_to_json(const Expr& e);
Expr expr_from_json(const json& j, const std::string& path = "$");

json problem_to_json(const CompositeProblem& p);
CompositeProblem problem_from_json(const json& j);

json blocks_to_json(const Blocks& z);
Blocks blocks_from_json(const json& j, const std::string& path = "$");

// Canonical text form; serialize(parse(serialize(p))) == serialize(p).
std::string serialize_problem(const CompositeProblem& p);
CompositeProblem parse_problem(const std::string& text);

json read_json_file(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dstat
