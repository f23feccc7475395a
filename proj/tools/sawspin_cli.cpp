// sawspin command-line front end.

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sawspin/config.hpp"
#include "sawspin/io.hpp"
#include "sawspin/runner.hpp"
#include "sawspin/version.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<unsigned long long> seed;
  std::optional<std::string> out;
  std::optional<int> samples;
  std::optional<int> threads;
  bool per_configuration = false;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config_path, "key = value config file");
  sub->add_option("--set", f.overrides, "override as key=value (repeatable)")->take_all();
  sub->add_option("--seed", f.seed, "RNG seed");
  sub->add_option("--out", f.out, "output CSV path (default: stdout)");
  sub->add_option("--samples", f.samples, "spectral-diffusion samples");
  sub->add_option("--threads", f.threads, "worker threads, 0 = all cores");
  sub->add_flag("--per-configuration", f.per_configuration, "add one column per Lambda configuration");
}

sawspin::Config build_config(const CommonFlags& f) {
  sawspin::Config c;
  if (!f.config_path.empty()) c.merge_file(f.config_path);
  for (const auto& a : f.overrides) c.set_assignment(a);
  if (f.seed) c.set("seed", std::to_string(*f.seed));
  if (f.out) c.set("out", *f.out);
  if (f.samples) c.set("diffusion.samples", std::to_string(*f.samples));
  if (f.threads) c.set("threads", std::to_string(*f.threads));
  if (f.per_configuration) c.set("output.per_configuration", "true");
  return c;
}

std::string one_line(std::string s) {
  for (char& ch : s)
    if (ch == '\n' || ch == '\r') ch = ' ';
  return s;
}

int fail(const std::string& code, const std::string& key, const std::string& detail, int status) {
  std::cerr << "sawspin-error code=" << code << " key=" << (key.empty() ? "-" : key) << " detail=\"" << one_line(detail)
            << "\"\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lambda-system phonon-sideband simulator"};
  app.set_version_flag("--version", sawspin::version);
  app.require_subcommand(1);
  CommonFlags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"cpt", "phonon-assisted CPT spectrum"},
      {"sideband-spectrum", "hyperfine-resolved sideband spectrum with six-Lorentzian fit"},
      {"sideband-transient", "transfer versus optical pulse duration"},
      {"decoherence-budget", "Omega_ss, pumping and induced decoherence versus detuning"},
      {"device", "IDT center frequency and electron-phonon coupling"},
      {"validate", "quick invariant suite"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", "-", e.what(), 64);
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const auto start = std::chrono::steady_clock::now();
    const sawspin::Config config = build_config(flags);
    const sawspin::RunSettings settings = sawspin::resolve(config);

    if (command == "validate") {
      const auto results = sawspin::run_validation_suite(settings.seed);
      int failed = 0;
      for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
        failed += r.passed ? 0 : 1;
      }
      std::cout << results.size() - failed << "/" << results.size() << " properties pass\n";
      return failed ? 1 : 0;
    }

    sawspin::CsvTable table;
    if (command == "cpt")
      table = sawspin::run_cpt(settings, config);
    else if (command == "sideband-spectrum")
      table = sawspin::run_sideband_spectrum(settings, config);
    else if (command == "sideband-transient")
      table = sawspin::run_sideband_transient(settings, config);
    else if (command == "decoherence-budget")
      table = sawspin::run_decoherence_budget(settings, config);
    else
      table = sawspin::run_device(settings, config);

    const std::string text = sawspin::to_csv_text(table);
    if (settings.out.empty()) {
      std::cout << text;
    } else {
      sawspin::write_atomically(settings.out, text);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      sawspin::write_atomically(settings.out + ".meta",
                                sawspin::meta_text(config.serialize(), settings.seed, sawspin::version, wall));
    }
    if (command == "device" && !settings.out.empty())
      std::cout << "idt_center_frequency_MHz = " << sawspin::format_number(table.rows[0][0]) << "\n";
    return 0;
  } catch (const sawspin::ConfigError& e) {
    return fail("config", e.key, e.what(), 2);
  } catch (const sawspin::InvalidInput& e) {
    return fail("invalid-input", "-", e.what(), 3);
  } catch (const sawspin::IntegrationError& e) {
    return fail("integration", "-", e.what(), 4);
  } catch (const sawspin::DegenerateSteadyState& e) {
    return fail("degenerate-steady-state", "-", e.what(), 4);
  } catch (const sawspin::CutoffError& e) {
    return fail("cutoff", "-", e.what(), 4);
  } catch (const sawspin::FitError& e) {
    return fail("fit", "-", e.what(), 4);
  } catch (const sawspin::IoError& e) {
    return fail("io", "-", e.what(), 5);
  } catch (const std::exception& e) {
    return fail("internal", "-", e.what(), 70);
  }
}
