"""python -m signerlab_extract.run_embeddings"""

from .cli import main_embeddings

if __name__ == "__main__":
    main_embeddings()
