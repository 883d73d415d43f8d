"""CLI entry point for slice-alloc."""

from slice_alloc.cli.main import main


if __name__ == "__main__":
    main()
