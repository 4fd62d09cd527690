#pragma once

namespace zkaudit::cli {

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitReject = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitAbort = 4;
inline constexpr int kExitCommitment = 5;

int run(int argc, char** argv);

}  // namespace zkaudit::cli
