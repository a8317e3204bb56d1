#include "advkit/cli.hpp"

#include <functional>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "advkit/commands.hpp"

namespace advkit {

int exit_code_for(const Error& error) {
  const std::string_view c = error.category();
  if (c == "config_error") return 2;
  if (c == "data_error" || c == "io_error" || c == "dimension_error") return 3;
  return 4;
}

namespace {

using Command = std::function<void(const RunConfig&, const CommandOptions&, std::ostream&)>;

struct CommandArgs {
  std::string config;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool force = false;
};

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"advkit: gradient-sign, C&W and iterative ensemble attacks on a small model zoo"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> names = {
      {"gen-data", "generate or import the dataset"},
      {"train", "train the model zoo"},
      {"attack", "run the configured attack and archive its images"},
      {"eval", "transfer evaluation across sources and victims"},
      {"sweep", "success versus iteration budget"}};
  const std::vector<Command> commands = {cmd_gen_data, cmd_train, cmd_attack, cmd_eval, cmd_sweep};

  std::vector<CommandArgs> args(names.size());
  std::vector<CLI::App*> subs;
  std::vector<CLI::Option*> seed_opts;
  for (std::size_t i = 0; i < names.size(); ++i) {
    CLI::App* sub = app.add_subcommand(names[i].first, names[i].second);
    sub->add_option("--config", args[i].config, "run config JSON")->required();
    sub->add_option("--output-dir", args[i].output_dir, "override output_dir");
    seed_opts.push_back(sub->add_option("--seed", args[i].seed, "override global_seed"));
    sub->add_flag("--force", args[i].force, "overwrite existing outputs");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "config_error: " << one_line(e.what()) << "\n";
    return 2;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      ConfigOverrides overrides;
      if (seed_opts[i]->count() > 0) overrides.seed = args[i].seed;
      if (!args[i].output_dir.empty()) overrides.output_dir = args[i].output_dir;
      const RunConfig config = load_run_config(args[i].config, overrides);
      commands[i](config, CommandOptions{args[i].force}, out);
      return 0;
    } catch (const Error& e) {
      err << e.category() << ": " << one_line(e.what()) << "\n";
      return exit_code_for(e);
    } catch (const std::exception& e) {
      err << "internal_error: " << one_line(e.what()) << "\n";
      return 1;
    }
  }
  return 0;
}

}  // namespace advkit
