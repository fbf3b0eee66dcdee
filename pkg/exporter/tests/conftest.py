import json

import numpy as np
import pytest


def bytes_to_unicode():
    """GPT-2/CLIP byte-to-printable-unicode table (for a byte-complete vocab)."""
    bs = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("\xa1"), ord("\xac") + 1))
        + list(range(ord("\xae"), ord("\xff") + 1))
    )
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, [chr(c) for c in cs]))


@pytest.fixture(scope="session")
def tiny_clip_dir(tmp_path_factory):
    """A minimal random-weight CLIP checkpoint saved locally (no network)."""
    import torch
    from tokenizers import Tokenizer, decoders, models, pre_tokenizers
    from transformers import (
        CLIPConfig,
        CLIPImageProcessor,
        CLIPModel,
        CLIPProcessor,
        CLIPTextConfig,
        CLIPTokenizerFast,
        CLIPVisionConfig,
    )

    td = str(tmp_path_factory.mktemp("tiny-clip"))
    chars = list(bytes_to_unicode().values())
    vocab = {}
    for ch in chars:
        vocab[ch] = len(vocab)
    for ch in chars:
        vocab[ch + "</w>"] = len(vocab)
    vocab["<|startoftext|>"] = len(vocab)
    vocab["<|endoftext|>"] = len(vocab)

    bpe = models.BPE(vocab=vocab, merges=[], unk_token="<|endoftext|>", end_of_word_suffix="</w>")
    tok_obj = Tokenizer(bpe)
    tok_obj.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    tok_obj.decoder = decoders.ByteLevel()
    tokenizer = CLIPTokenizerFast(
        tokenizer_object=tok_obj,
        unk_token="<|endoftext|>",
        bos_token="<|startoftext|>",
        eos_token="<|endoftext|>",
        pad_token="<|endoftext|>",
        model_max_length=32,
    )

    config = CLIPConfig(
        text_config=CLIPTextConfig(
            vocab_size=len(vocab),
            hidden_size=32,
            intermediate_size=64,
            num_hidden_layers=2,
            num_attention_heads=2,
            max_position_embeddings=32,
            bos_token_id=vocab["<|startoftext|>"],
            eos_token_id=vocab["<|endoftext|>"],
        ),
        vision_config=CLIPVisionConfig(
            hidden_size=32,
            intermediate_size=64,
            num_hidden_layers=2,
            num_attention_heads=2,
            image_size=32,
            patch_size=8,
        ),
        projection_dim=16,
    )
    torch.manual_seed(0)
    model = CLIPModel(config)
    processor = CLIPProcessor(
        image_processor=CLIPImageProcessor(
            size={"shortest_edge": 32}, crop_size={"height": 32, "width": 32}
        ),
        tokenizer=tokenizer,
    )
    model.save_pretrained(td)
    processor.save_pretrained(td)
    return td


@pytest.fixture(scope="session")
def sample_images_dir(tmp_path_factory):
    from PIL import Image

    td = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(7)
    for i in range(10):
        arr = rng.uniform(0, 255, size=(32, 32, 3)).astype("uint8")
        Image.fromarray(arr).save(td / f"img_{i:02d}.png")
    (td / "notes.txt").write_text("not an image")
    return str(td)


@pytest.fixture(scope="session")
def sample_prompts_file(tmp_path_factory):
    td = tmp_path_factory.mktemp("texts")
    path = td / "classes.txt"
    path.write_text("dog\ncat\nfrog\nship\ntruck\n")
    return str(path)


def write_manifest(path, **kw):
    with open(path, "w") as fh:
        json.dump(kw, fh)
    return str(path)
