"""Continual multilingual program repair with difficulty replay and sampled EWC."""

from .corpus import BugFixPair, TaskDataset, TaskStream, generate_synthetic_corpus
from .errors import (CompatibilityError, ConfigurationError, DecodeError, FormatError,
                     InputError, ParseError, PolyRepairError, PreconditionError,
                     ValidationError)
from .evaluation import EvalMatrix, exact_match, forgetting_report
from .ewc import FisherSnapshot, compute_fisher, ewc_penalty, total_objective
from .generator import CandidatePatch, GenConfig, beam_search, filtered_sample, generate_patches
from .model import Checkpoint, ModelConfig, new_checkpoint
from .prompt import render_prompt
from .replay import ExampleSet, ReplayStore, select_examples
from .rerepair import rerepair
from .tokenizer import Vocabulary, build_vocab, decode, encode
from .trainer import TrainConfig, run_stream, train_task

__version__ = "0.1.0"
