from .cbow import TrainConfig, cbow_grad, cbow_loss, train_cbow, train_position
from .huffman import HuffmanTree, build_huffman
from .model import EmbeddingModel, OutOfVocabularyError, cosine_neighbors
from .vocab import EmptyVocabularyError, Vocab, build_vocab

__all__ = [
    "TrainConfig",
    "cbow_grad",
    "cbow_loss",
    "train_cbow",
    "train_position",
    "HuffmanTree",
    "build_huffman",
    "EmbeddingModel",
    "OutOfVocabularyError",
    "cosine_neighbors",
    "EmptyVocabularyError",
    "Vocab",
    "build_vocab",
]
