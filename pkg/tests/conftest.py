import textwrap
from pathlib import Path

import pytest

from empdist.synthetic import write_corpus

TINY_VOCAB = (
    "<s> <pad> </s> <unk> the news story about family who lost their home after storm people "
    "community help needed very hard time reading article made think children water food "
    "shelter money sad afraid i felt for them"
).split()


def build_tiny_roberta(directory: Path) -> Path:
    """Save a randomly initialised 2-layer RoBERTa plus a word-level tokenizer."""
    import torch
    from tokenizers import Tokenizer, models, pre_tokenizers, processors
    from transformers import PreTrainedTokenizerFast, RobertaConfig, RobertaModel

    vocab = {tok: i for i, tok in enumerate(TINY_VOCAB)}
    tok = Tokenizer(models.WordLevel(vocab=vocab, unk_token="<unk>"))
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    tok.post_processor = processors.TemplateProcessing(
        single="<s> $A </s>", special_tokens=[("<s>", 0), ("</s>", 2)]
    )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        bos_token="<s>", eos_token="</s>", pad_token="<pad>", unk_token="<unk>",
        cls_token="<s>", sep_token="</s>",
    )
    torch.manual_seed(0)
    config = RobertaConfig(
        vocab_size=len(vocab), hidden_size=32, num_hidden_layers=2, num_attention_heads=2,
        intermediate_size=64, max_position_embeddings=160, pad_token_id=1, bos_token_id=0,
        eos_token_id=2, type_vocab_size=1,
    )
    model = RobertaModel(config)
    directory.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(directory)
    fast.save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def tiny_roberta_cache(tmp_path_factory):
    """An encoder cache dir holding the tiny model under the ``roberta-base`` slot."""
    cache = tmp_path_factory.mktemp("encoder_cache")
    build_tiny_roberta(cache / "roberta-base")
    return cache


@pytest.fixture(scope="session")
def synthetic_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("synthetic")
    write_corpus(directory, sizes=(200, 50, 50), seed=0)
    return directory


TOY_CONFIG = """\
data:
  train: {data}/train.tsv
  dev: {data}/dev.tsv
  test: {data}/test.tsv
encoders:
  - name: toy
    pooling: mean_tokens
train:
  learning_rate: 0.1
  epochs: 40
  batch_size: 16
combiners: [mean, linear_regression, svr, gradient_boosted_trees]
run_dir: {run_dir}
"""


@pytest.fixture
def toy_config_file(tmp_path, synthetic_dir):
    def make(run_dir="run", data=None, extra=""):
        text = TOY_CONFIG.format(data=data or synthetic_dir, run_dir=tmp_path / run_dir)
        path = tmp_path / f"{run_dir}.yaml"
        path.write_text(text + textwrap.dedent(extra))
        return path

    return make
