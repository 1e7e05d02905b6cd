#pragma once

#include <array>
#include <string>

namespace promptstream {

// Per-modality missing indicators (true = missing). Modalities are indexed
// audio=0, video=1, text=2 throughout. A fully-missing triple is invalid;
// the seven legal patterns are in bijection with task ids 1..7.
struct MissingPattern {
    bool audio_missing = false;
    bool video_missing = false;
    bool text_missing = false;

    bool missing(int modality) const {
        return modality == 0 ? audio_missing : modality == 1 ? video_missing : text_missing;
    }
    bool complete() const { return !audio_missing && !video_missing && !text_missing; }
    bool operator==(const MissingPattern&) const = default;
};

inline constexpr int kNumTasks = 7;
inline constexpr int kNumModalities = 3;

// Throws DomainError on the all-missing pattern.
int task_id_from_pattern(const MissingPattern& pattern);
MissingPattern pattern_from_task_id(int task_id);
std::string pattern_to_string(const MissingPattern& pattern);

}  // namespace promptstream
