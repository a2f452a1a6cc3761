//===- halogen.cpp - stencil compiler driver -------------------------------===//
//
// This file is licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Command-line driver: parse, verify, and print textual IR, run lowering
// pipelines, execute stencil programs serially, and simulate decomposed
// programs across ranks with an optional bitwise check against the serial
// reference.
//
//===----------------------------------------------------------------------===//

#include "halogen/dialects/mpi.hpp"
#include "halogen/exec/kernels.hpp"
#include "halogen/exec/serial.hpp"
#include "halogen/exec/simulator.hpp"
#include "halogen/exec/throughput.hpp"
#include "halogen/ir/parser.hpp"
#include "halogen/ir/pass.hpp"
#include "halogen/ir/printer.hpp"
#include "halogen/ir/verifier.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace halogen;

namespace {

int printDiags(const std::vector<ir::Diagnostic> &diags) {
  for (const auto &d : diags)
    std::cerr << d.str() << "\n";
  return 1;
}

/// Reads the whole input; "-" names stdin.
bool readInput(const std::string &path, std::string &text, std::string &name) {
  if (path == "-") {
    std::ostringstream os;
    os << std::cin.rdbuf();
    text = os.str();
    name = "<stdin>";
    return true;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open '" << path << "'\n";
    return false;
  }
  std::ostringstream os;
  os << in.rdbuf();
  text = os.str();
  name = path;
  return true;
}

ir::ModuleOp parseOrExit(const std::string &path, bool verify) {
  std::string text, name;
  if (!readInput(path, text, name))
    std::exit(1);
  auto mod = ir::parseModule(text, name);
  if (!mod.ok()) {
    printDiags(mod.diags);
    std::exit(1);
  }
  if (verify) {
    auto diags = ir::verifyModule(**mod);
    if (!diags.empty()) {
      printDiags(diags);
      std::exit(1);
    }
  }
  return std::move(*mod);
}

ir::mpi::AbiTable abiOrExit(const std::string &abiPath) {
  auto abi = abiPath.empty() ? ir::mpi::AbiTable::fromEnvironment()
                             : ir::mpi::AbiTable::loadFile(abiPath);
  if (!abi.ok()) {
    printDiags(abi.diags);
    std::exit(1);
  }
  return *abi;
}

std::string fingerprintLine(std::size_t idx, const exec::Buffer &b) {
  std::ostringstream os;
  os << "field " << idx << ": " << std::hex << exec::fingerprint(b) << std::dec
     << " " << b.bounds().str();
  return os.str();
}

exec::KernelSpec addKernelFlags(CLI::App *cmd) {
  exec::KernelSpec spec;
  return spec;
}

} // namespace

int main(int argc, char **argv) {
  ir::ensurePassesRegistered();
  CLI::App app{"stencil compiler and deterministic rank simulator"};
  app.require_subcommand(1);

  std::string input = "-";
  std::string passes;
  std::string abiPath;
  std::int64_t timesteps = 1;
  std::uint64_t seed = 0;
  double tol = 0.0;
  bool check = false;
  bool stats = false;
  bool listPasses = false;
  bool values = false;
  exec::KernelSpec spec;
  std::string gridOpt;
  std::string label;

  auto *parseCmd = app.add_subcommand("parse", "parse and reprint a module");
  parseCmd->add_option("input", input, "input file, - for stdin");

  auto *verifyCmd =
      app.add_subcommand("verify", "parse and verify; silent on success");
  verifyCmd->add_option("input", input, "input file, - for stdin");

  auto *printCmd =
      app.add_subcommand("print", "parse, verify, and reprint a module");
  printCmd->add_option("input", input, "input file, - for stdin");

  auto *pipeCmd = app.add_subcommand("pipeline", "run a lowering pipeline");
  pipeCmd->add_option("input", input, "input file, - for stdin");
  pipeCmd->add_option("-p,--passes", passes,
                      "comma-separated steps, e.g. "
                      "'propagate-bounds,decompose grid=2x2'");
  pipeCmd->add_flag("--list", listPasses, "list registered passes and exit");

  auto *runCmd = app.add_subcommand(
      "run-serial", "run a stencil-level module on one process");
  runCmd->add_option("input", input, "input file, - for stdin");
  runCmd->add_option("-t,--timesteps", timesteps, "time steps to run");
  runCmd->add_flag("--values", values, "print every field value");

  auto *simCmd = app.add_subcommand(
      "simulate", "run a decomposed module across simulated ranks");
  simCmd->add_option("input", input, "input file, - for stdin");
  simCmd->add_option("-t,--timesteps", timesteps, "time steps to run");
  simCmd->add_option("-s,--seed", seed, "rank scheduling seed");
  simCmd->add_option("--abi", abiPath, "ABI table file (default: HALOGEN_ABI)");
  simCmd->add_flag("--check", check,
                   "also run the serial reference and compare");
  simCmd->add_option("--tol", tol,
                     "absolute tolerance for --check (default: bitwise)");
  simCmd->add_flag("--stats", stats, "print dynamic op counts");

  auto *genCmd =
      app.add_subcommand("gen-kernel", "emit a reference stencil program");
  genCmd->add_option("--kind", spec.kind, "heat, wave, or copy");
  genCmd->add_option("--rank", spec.rank, "1, 2, or 3 dimensions");
  genCmd->add_option("--extent", spec.extent, "domain points per dimension");
  genCmd->add_option("--order", spec.order, "Laplacian order: 2, 4, or 8");

  auto *benchCmd = app.add_subcommand(
      "bench", "time a kernel and print a throughput CSV");
  benchCmd->add_option("--kind", spec.kind, "heat, wave, or copy");
  benchCmd->add_option("--rank", spec.rank, "1, 2, or 3 dimensions");
  benchCmd->add_option("--extent", spec.extent, "domain points per dimension");
  benchCmd->add_option("--order", spec.order, "Laplacian order: 2, 4, or 8");
  benchCmd->add_option("-t,--timesteps", timesteps, "time steps to run");
  benchCmd->add_option("--grid", gridOpt,
                       "process grid AxB; empty runs serially");
  benchCmd->add_option("--label", label, "row label (default: derived)");

  CLI11_PARSE(app, argc, argv);

  if (parseCmd->parsed()) {
    auto mod = parseOrExit(input, /*verify=*/false);
    std::cout << ir::printModule(*mod);
    return 0;
  }

  if (verifyCmd->parsed()) {
    parseOrExit(input, /*verify=*/true);
    return 0;
  }

  if (printCmd->parsed()) {
    auto mod = parseOrExit(input, /*verify=*/true);
    std::cout << ir::printModule(*mod);
    return 0;
  }

  if (pipeCmd->parsed()) {
    if (listPasses) {
      for (const auto *info : ir::PassRegistry::get().list())
        std::cout << info->name << " - " << info->summary << "\n";
      return 0;
    }
    auto mod = parseOrExit(input, /*verify=*/true);
    auto out = ir::runPipeline(*mod, passes);
    if (!out.ok())
      return printDiags(out.diags);
    std::cout << ir::printModule(**out);
    return 0;
  }

  if (runCmd->parsed()) {
    auto mod = parseOrExit(input, /*verify=*/true);
    auto fields = exec::initialFields(*mod);
    if (fields.empty()) {
      std::cerr << "error: module has no all-field entry function\n";
      return 1;
    }
    try {
      auto out = exec::runSerialStencil(*mod, std::move(fields), timesteps);
      for (std::size_t i = 0; i < out.size(); ++i) {
        std::cout << fingerprintLine(i, *out[i]) << "\n";
        if (values) {
          for (std::int64_t k = 0; k < out[i]->count(); ++k)
            std::cout << "  " << out[i]->getF64(k) << "\n";
        }
      }
    } catch (const ir::TrapError &e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
    return 0;
  }

  if (simCmd->parsed()) {
    auto mod = parseOrExit(input, /*verify=*/true);
    exec::SimOptions opts;
    opts.timesteps = timesteps;
    opts.seed = seed;
    opts.abi = abiOrExit(abiPath);
    auto geom = exec::geometryOf(*mod);
    if (!geom.ok())
      return printDiags(geom.diags);
    auto init = exec::initialFields(*geom->reference);
    auto res = exec::simulate(*mod, init, opts);
    if (!res.ok) {
      std::cerr << "error: " << res.error;
      if (!res.error.empty() && res.error.back() != '\n')
        std::cerr << "\n";
      return 1;
    }
    for (std::size_t i = 0; i < res.fields.size(); ++i)
      std::cout << fingerprintLine(i, *res.fields[i]) << "\n";
    if (stats) {
      for (const auto &[name, count] : res.opCounts)
        std::cout << "count " << name << " " << count << "\n";
    }
    if (check) {
      auto serialInit = exec::initialFields(*geom->reference);
      auto serialOut =
          exec::runSerialStencil(*geom->reference, serialInit, timesteps);
      bool allOk = true;
      for (std::size_t i = 0; i < serialOut.size(); ++i) {
        std::string diff;
        bool same =
            tol > 0.0
                ? exec::approxEqual(*serialOut[i], *res.fields[i], tol, diff)
                : exec::bitwiseEqual(*serialOut[i], *res.fields[i]);
        if (!tol && !same)
          exec::approxEqual(*serialOut[i], *res.fields[i], 0.0, diff);
        if (same) {
          std::cout << "check field " << i
                    << (tol > 0.0 ? ": within tolerance" : ": bitwise match")
                    << "\n";
        } else {
          std::cout << "check field " << i << ": MISMATCH " << diff << "\n";
          allOk = false;
        }
      }
      if (!allOk)
        return 1;
    }
    return 0;
  }

  if (genCmd->parsed()) {
    auto mod = exec::buildKernel(spec);
    if (!mod.ok())
      return printDiags(mod.diags);
    std::cout << ir::printModule(**mod);
    return 0;
  }

  if (benchCmd->parsed()) {
    auto mod = exec::buildKernel(spec);
    if (!mod.ok())
      return printDiags(mod.diags);
    std::int64_t corePoints = 1;
    for (int d = 0; d < spec.rank; ++d)
      corePoints *= spec.extent;
    exec::BenchRow row;
    row.label = label.empty()
                    ? spec.kind + "-" + std::to_string(spec.rank) + "d-n" +
                          std::to_string(spec.extent) + "-o" +
                          std::to_string(spec.order) +
                          (gridOpt.empty() ? "" : "-g" + gridOpt)
                    : label;
    row.corePoints = corePoints;
    row.steps = timesteps;
    try {
      if (gridOpt.empty()) {
        auto fields = exec::initialFields(**mod);
        auto t0 = std::chrono::steady_clock::now();
        exec::runSerialStencil(**mod, std::move(fields), timesteps);
        row.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      } else {
        auto lowered = ir::runPipeline(
            **mod, "propagate-bounds,decompose grid=" + gridOpt +
                      ",lower-dmp-to-mpi");
        if (!lowered.ok())
          return printDiags(lowered.diags);
        exec::SimOptions opts;
        opts.timesteps = timesteps;
        opts.seed = seed;
        opts.abi = abiOrExit(abiPath);
        auto init = exec::initialFields(**mod);
        auto t0 = std::chrono::steady_clock::now();
        auto res = exec::simulate(**lowered, init, opts);
        row.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        if (!res.ok) {
          std::cerr << "error: " << res.error << "\n";
          return 1;
        }
      }
    } catch (const ir::TrapError &e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
    std::cout << exec::csvHeader() << "\n" << exec::csvRow(row) << "\n";
    return 0;
  }

  return 0;
}
