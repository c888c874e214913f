#pragma once

#include <string>
#include <vector>

#include "entype/config.hpp"

namespace entype {

// Subcommand bodies; each throws entype errors on bad input and returns the
// process exit code otherwise. run_cli wires them to argv and turns thrown
// errors into stderr messages.
int cmd_synth(const RunConfig& cfg, const std::string& out_dir);
int cmd_preprocess(const RunConfig& cfg, const std::string& out_dir);
int cmd_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_path);
int cmd_predict(const RunConfig& cfg, const std::string& data_dir, const std::string& model_path,
                const std::string& split, const std::string& out_path);
int cmd_joint(const RunConfig& cfg, const std::vector<std::string>& inputs,
              const std::string& out_path);
int cmd_evaluate(const RunConfig& cfg, const std::string& data_dir, const std::string& dev_path,
                 const std::string& test_path, const std::string& out_path, bool force);

int run_cli(int argc, char** argv);

}  // namespace entype
