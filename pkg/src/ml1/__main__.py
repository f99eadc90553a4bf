from ml1.cli import script_main

script_main()
