#pragma once

#include <functional>
#include <string>
#include <vector>

namespace oamqec::oracle {

enum class VerifyLevel { fast, full };

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Runs the oracle suite, reporting each check as it finishes.
std::vector<CheckResult> run_verification(
    VerifyLevel level, const std::function<void(const CheckResult&)>& on_result = {});

}  // namespace oamqec::oracle
