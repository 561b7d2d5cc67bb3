// ir-cli: one-shot analysis of a CSV file and synthetic data generation.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "ir/json.hpp"
#include "ir/pipeline.hpp"
#include "ir/svg.hpp"
#include "ir/synth.hpp"

namespace {

ir::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ir::ValidationError("cannot open '" + path + "'");
  try {
    return ir::json::parse(in);
  } catch (const ir::json::parse_error& e) {
    throw ir::ValidationError(path + ": " + e.what());
  }
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ir::ValidationError("cannot write '" + path + "'");
  out << text;
}

int run_analyze(const std::string& config_path, const std::string& csv_path,
                const std::string& schema_path, const std::string& format, const std::string& output) {
  ir::json config = read_json_file(config_path);
  ir::SchemaHint hint;
  if (config.contains("schema")) hint = ir::schema_hint_from_json(config.at("schema"));
  if (!schema_path.empty())
    for (auto& [k, v] : ir::schema_hint_from_json(read_json_file(schema_path))) hint[k] = v;

  auto ds = std::make_shared<const ir::Dataset>(ir::ingest_csv(csv_path, hint));
  auto req = ir::analysis_request_from_json(config, ds->schema);
  if (req.dataset.empty()) req.dataset = ds->name;
  auto resp = ir::run_analysis(ds, req);
  for (const auto& w : resp.warnings) std::cerr << "warning: " << w << "\n";
  if (format == "svg-summary") emit(ir::render_svg_summary(resp.chart), output);
  else emit(ir::to_json(resp, ir::to_json(req)).dump(2) + "\n", output);
  return 0;
}

int run_synth(const std::string& spec_path, const std::string& output) {
  auto ds = ir::generate(ir::generator_spec_from_json(read_json_file(spec_path)));
  std::ostringstream out;
  ir::write_csv(out, ds);
  emit(out.str(), output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inline replication analytics"};
  app.require_subcommand(1);

  std::string config, csv, schema, format = "json", output;
  auto* analyze = app.add_subcommand("analyze", "Analyze a CSV file");
  analyze->add_option("--config", config, "Analysis request JSON")->required()->check(CLI::ExistingFile);
  analyze->add_option("--csv", csv, "Input CSV")->required()->check(CLI::ExistingFile);
  analyze->add_option("--schema", schema, "Column kind overrides JSON")->check(CLI::ExistingFile);
  analyze->add_option("--out", format, "Output format")->check(CLI::IsMember({"json", "svg-summary"}));
  analyze->add_option("-o,--output", output, "Output file (default stdout)");

  std::string spec, synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--spec", spec, "Generator spec JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*analyze) return run_analyze(config, csv, schema, format, output);
    return run_synth(spec, synth_out);
  } catch (const ir::IngestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ir::AllUndefinedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
