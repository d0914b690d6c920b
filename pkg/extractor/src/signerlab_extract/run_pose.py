"""python -m signerlab_extract.run_pose"""

from .cli import main_pose

if __name__ == "__main__":
    main_pose()
