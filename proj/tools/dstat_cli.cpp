#include <iostream>

#include "commands.hpp"
#include "dstat/cones.hpp"
#include "dstat/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dstat: directional stationarity for multicomposite problems"};
  app.set_version_flag("--version", std::string(DSTAT_VERSION));
  app.require_subcommand(1);
  int result = dstat::cli::kOk;
  dstat::cli::register_commands(app, result);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : dstat::cli::kValidation;
  } catch (const dstat::cli::Exit& e) {
    if (e.what()[0] != '\0') std::cerr << e.what() << '\n';
    return e.code;
  } catch (const dstat::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return dstat::cli::kValidation;
  } catch (const dstat::InfeasiblePointError& e) {
    std::cerr << "infeasible point: " << e.what() << '\n';
    return dstat::cli::kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return dstat::cli::kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dstat::cli::kValidation;
  }
  return result;
}
