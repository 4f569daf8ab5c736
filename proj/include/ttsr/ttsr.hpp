#pragma once

#include "ttsr/config.hpp"
#include "ttsr/consensus.hpp"
#include "ttsr/curriculum.hpp"
#include "ttsr/errors.hpp"
#include "ttsr/grpo.hpp"
#include "ttsr/orchestrator.hpp"
#include "ttsr/question.hpp"
#include "ttsr/remote.hpp"
#include "ttsr/remote_runner.hpp"
#include "ttsr/rng.hpp"
#include "ttsr/similarity.hpp"
#include "ttsr/snapshot.hpp"
#include "ttsr/teacher_rewards.hpp"
#include "ttsr/toy_policy.hpp"
#include "ttsr/trajectory.hpp"
